#include "mtr/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace mtr {

namespace {

std::mutex log_mutex;

void say(std::ostream* log, const std::string& s) {
  if (!log) return;
  std::lock_guard lock(log_mutex);
  *log << s << std::endl;
}

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

bool vector_potential_vanishes(const VectorField& a) {
  for (int j = 0; j < 3; ++j)
    for (double v : a[j].values())
      if (v != 0.0) return false;
  return true;
}

}  // namespace

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  PowerFit f;
  if (x.size() != y.size()) throw ConfigError("power fit: length mismatch");
  f.points = static_cast<int>(x.size());
  if (x.size() < 3) {
    f.reason = "fewer than 3 points";
    return f;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::abs(x[i]) > 0.0) || !(y[i] > 0.0)) {
      f.reason = "degenerate: nonpositive values";
      return f;
    }
    lx.push_back(std::log(std::abs(x[i])));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    f.reason = "degenerate: all |x| equal";
    return f;
  }
  f.ok = true;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.x_min = std::abs(x.front());
  f.x_max = std::abs(x.front());
  for (double v : x) {
    f.x_min = std::min(f.x_min, std::abs(v));
    f.x_max = std::max(f.x_max, std::abs(v));
  }
  return f;
}

ThresholdModel obtain_model(const ExperimentConfig& config, std::ostream* log) {
  const GridSpec grid = config.grid();
  if (!config.model_dir.empty() && std::filesystem::exists(config.model_dir / "model.txt")) {
    ThresholdModel m = load_model(config.model_dir);
    if (!(m.grid() == grid)) throw GridMismatch("saved model grid differs from the configured grid");
    say(log, "loaded model from " + config.model_dir.string());
    return m;
  }
  say(log, "tuning coupling on " + std::to_string(grid.points) + "^3, L = " + num(grid.extent));
  ThresholdModel m = tune_coupling(config.potential, grid, config.parity, config.tuning());
  say(log, "tuned coupling " + num(m.potential.coupling) + ", E0 = " + num(m.e0) + ", gap = " + num(m.gap));
  if (!config.model_dir.empty()) save_model(m, config.model_dir);
  return m;
}

void check_gate(const ResonanceCoefficients& c) {
  if (!c.b_minus_2yg0y_positive) {
    std::ostringstream msg;
    msg << "assumption gate: b - 2<psi0, Y G0 Y psi0> = " << c.b - 2.0 * c.yg0y << " is not > 0";
    throw AssumptionError(msg.str());
  }
  if (!c.btil_positive) {
    std::ostringstream msg;
    msg << "assumption gate: b~ = " << c.btil << " is not > 0";
    throw AssumptionError(msg.str());
  }
}

CapSpec resolve_cap(const ExperimentConfig& config, const GridSpec& grid, const ResonanceCoefficients& coeffs) {
  CapSpec cap = config.cap();
  if (!config.cap_tune || cap.strength == 0.0 || !(coeffs.btil > 0.0) || config.lambdas.empty()) return cap;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double l : config.lambdas) {
    if (l == 0.0) continue;
    lo = std::min(lo, std::abs(l));
    hi = std::max(hi, std::abs(l));
  }
  if (!(hi > 0.0)) return cap;
  const double s = std::sqrt(coeffs.btil);
  cap.strength = tune_cap_strength(cap, grid.spacing, grid.extent, s * lo, s * hi);
  return cap;
}

ResonanceEstimate feshbach_estimate(const ThresholdModel& model, const VectorField& a,
                                    const ResonanceCoefficients& coeffs, double lambda, const CapSpec& cap,
                                    double tol_solve, ResonanceSearchWindow* window_out) {
  const ResonanceSearchWindow w = make_window(coeffs, lambda * lambda);
  if (window_out) *window_out = w;
  const FeshbachProblem p(model, a, lambda, cap, tol_solve);
  return locate_resonance(p, w);
}

SweepResult run_sweep(const ExperimentConfig& config, const RunOptions& opts) {
  SweepResult res;
  res.config = config;
  res.config_hash = config.hash();
  res.cap = config.cap();

  const ThresholdModel model = obtain_model(config, opts.log);
  res.model_hash = model_hash(model);
  res.potential = model.potential;
  res.e0 = model.e0;
  res.gap = model.gap;
  res.residual = model.residual;
  res.tol_eig = model.tol_eig;
  res.scale = model.scale;
  res.nearby = model.nearby;
  res.parity = model.parity;

  const VectorField a = eval_vector_potential(config.vector_potential, model.grid());
  res.zero_field = vector_potential_vanishes(a);
  res.assumptions = check_assumptions(model.v, a, model, res.cap.onset);
  say(opts.log, "computing resonance coefficients");
  res.coeffs = compute_coefficients(model, a, config.tol_solve);
  res.coeffs.tol_c = config.tol_c_relative * res.coeffs.b * res.coeffs.b;
  res.coeffs.nu = classify_nu(res.coeffs, res.coeffs.tol_c);
  if (!res.zero_field) {
    res.cap = resolve_cap(config, model.grid(), res.coeffs);
    res.cap_tuned = config.cap_tune && config.cap_strength_energy > 0.0 && res.coeffs.btil > 0.0;
    if (res.cap_tuned) say(opts.log, "CAP strength from the reflection scan: " + num(res.cap.strength));
  }

  std::vector<double> lambdas = opts.only ? *opts.only : config.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  res.rows.resize(lambdas.size());

  if (res.zero_field) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      LambdaRow& r = res.rows[i];
      r.lambda = lambdas[i];
      r.epsilon = lambdas[i] * lambdas[i];
      ResonanceEstimate e;
      e.lambda = r.lambda;
      e.epsilon = r.epsilon;
      e.valid = false;
      e.note = "no field";
      r.predictor = e;
      e.method = EstimateMethod::feshbach;
      r.feshbach = e;
    }
    res.gamma_fit.reason = res.x0_fit.reason = res.predictor_gamma_fit.reason = "degenerate: no field";
    res.warnings.push_back("vector potential vanishes identically: no resonance shift or width");
    return res;
  }

  check_gate(res.coeffs);
  if (res.coeffs.nu != -1) res.warnings.push_back("exceptional case (nu >= 1): predictor comparison disabled");
  if (!res.assumptions.decay_ok()) res.warnings.push_back("fitted decay exponent <= 2 on the sampled box");
  if (!res.assumptions.linear_term_ok()) res.warnings.push_back("linear-term residuals above threshold");

  // Time fits for the timefit_count largest |lambda|.
  std::vector<double> by_size = lambdas;
  std::sort(by_size.begin(), by_size.end(), [](double x, double y) { return std::abs(x) > std::abs(y); });
  auto wants_timefit = [&](double l) {
    if (opts.skip_timefit) return false;
    for (int k = 0; k < config.timefit_count && k < static_cast<int>(by_size.size()); ++k)
      if (by_size[static_cast<std::size_t>(k)] == l) return true;
    return false;
  };

  auto work = [&](std::size_t i) {
    LambdaRow& r = res.rows[i];
    r.lambda = lambdas[i];
    r.epsilon = r.lambda * r.lambda;
    const double be = res.coeffs.btil * r.epsilon;
    r.gap_ratio = be > 0.0 ? model.gap / be : std::numeric_limits<double>::infinity();
    r.gap_warning = r.gap_ratio < 10.0;
    const double k = std::sqrt(be);
    if (be > 0.0 && res.cap.strength > 0.0 && k * model.grid().spacing < 3.0)
      r.cap_reflection = cap_reflection_1d(res.cap, model.grid().spacing, model.grid().extent, k);
    else if (res.cap.strength == 0.0)
      r.cap_reflection = 1.0;
    if (r.lambda == 0.0) {
      r.feshbach_error = "lambda = 0: no perturbation";
      return;
    }
    try {
      r.predictor = predict_asymptotic(res.coeffs, r.lambda);
    } catch (const std::exception& e) {
      r.predictor_error = e.what();
    }
    try {
      say(opts.log, "lambda " + num(r.lambda) + ": Feshbach location");
      ResonanceSearchWindow w;
      r.feshbach = feshbach_estimate(model, a, res.coeffs, r.lambda, res.cap, config.tol_solve, &w);
      r.window = w;
      say(opts.log, "lambda " + num(r.lambda) + ": x0 = " + num(r.feshbach->x0) +
                        ", Gamma = " + num(r.feshbach->gamma));
    } catch (const std::exception& e) {
      r.feshbach_error = e.what();
      say(opts.log, "lambda " + num(r.lambda) + ": Feshbach failed: " + r.feshbach_error);
    }
    if (!wants_timefit(r.lambda)) return;
    try {
      const double g_ref = r.feshbach && r.feshbach->valid ? r.feshbach->gamma
                           : r.predictor                   ? r.predictor->gamma
                                                           : 0.0;
      const double T = g_ref > 0.0 ? std::min(config.t_max_time, 5.0 / g_ref) : config.t_max_time;
      say(opts.log, "lambda " + num(r.lambda) + ": propagating to t = " + num(T));
      SurvivalTrace tr =
          survival_amplitude(model, a, r.lambda, config.propagator_spec(), T, config.samples, res.cap);
      if (r.feshbach && r.feshbach->valid) {
        const cplx w0(r.feshbach->x0, -r.feshbach->gamma);
        for (std::size_t k = 0; k < tr.t.size(); ++k)
          r.sup_deviation =
              std::max(r.sup_deviation, std::abs(tr.amplitude[k] - std::exp(cplx(0.0, -1.0) * tr.t[k] * w0)));
      }
      r.trace = tr;
      const ExponentialFit fit = fit_exponential(tr);
      r.time_fit = fit.estimate;
      r.fit_window = fit.window;
      if (fit.short_window) r.time_fit->note = "short window";
      say(opts.log, "lambda " + num(r.lambda) + ": time-fit Gamma = " + num(r.time_fit->gamma));
    } catch (const std::exception& e) {
      r.time_fit_error = e.what();
      say(opts.log, "lambda " + num(r.lambda) + ": time fit failed: " + r.time_fit_error);
    }
  };

  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(lambdas.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < lambdas.size();) work(i);
    });
  for (auto& t : pool) t.join();

  std::vector<double> lx, gx, xx, lp, gp;
  bool all_valid = true;
  for (const auto& r : res.rows) {
    if (r.gap_warning)
      res.warnings.push_back("lambda " + num(r.lambda) + ": gap / (b~ eps) = " + num(r.gap_ratio) + " < 10");
    if (r.feshbach && r.feshbach->valid) {
      lx.push_back(r.lambda);
      gx.push_back(r.feshbach->gamma);
      xx.push_back(r.feshbach->x0);
    } else if (r.lambda != 0.0) {
      all_valid = false;
    }
    if (r.predictor) {
      lp.push_back(r.lambda);
      gp.push_back(r.predictor->gamma);
    }
  }
  res.gamma_fit = fit_power_law(lx, gx);
  res.x0_fit = fit_power_law(lx, xx);
  res.predictor_gamma_fit = fit_power_law(lp, gp);
  if (!all_valid) res.warnings.push_back("some Feshbach rows failed or are invalid; exponent fits use the rest");
  return res;
}

namespace {

nlohmann::json estimate_json(const std::optional<ResonanceEstimate>& e, const std::string& err) {
  nlohmann::json j;
  if (!e) {
    j["available"] = false;
    j["error"] = err;
    return j;
  }
  j["available"] = true;
  j["method"] = std::string(to_string(e->method));
  j["x0"] = e->x0;
  j["gamma"] = e->gamma;
  j["x0_uncertainty"] = e->x0_uncertainty;
  j["gamma_uncertainty"] = e->gamma_uncertainty;
  j["valid"] = e->valid;
  j["note"] = e->note;
  return j;
}

nlohmann::json fit_json(const PowerFit& f) {
  return {{"ok", f.ok},           {"reason", f.reason},     {"slope", f.slope}, {"intercept", f.intercept},
          {"r_squared", f.r_squared}, {"lambda_min", f.x_min}, {"lambda_max", f.x_max}, {"points", f.points}};
}

nlohmann::json decay_json(const DecayFit& d) {
  return {{"exponent", std::isfinite(d.exponent) ? nlohmann::json(d.exponent) : nlohmann::json("inf")},
          {"r_squared", d.r_squared},
          {"r_min", d.r_min},
          {"r_max", d.r_max}};
}

std::string opt_num(const std::optional<ResonanceEstimate>& e, double ResonanceEstimate::*field) {
  return e ? num((*e).*field) : "";
}

}  // namespace

std::string summary_text(const SweepResult& r) {
  std::ostringstream s;
  const auto& c = r.coeffs;
  s << "magnetic threshold resonance sweep\n"
    << "config hash  " << r.config_hash << "\n"
    << "model hash   " << r.model_hash << "\n"
    << "grid         n = " << r.config.points << ", L = " << num(r.config.extent_length) << "\n"
    << "coupling     " << num(r.potential.coupling) << "  (E0 = " << num(r.e0) << ", tol " << num(r.tol_eig)
    << ", gap " << num(r.gap) << ")\n"
    << "CAP          R0 = " << num(r.cap.onset) << ", w = " << num(r.cap.width)
    << ", eta_c = " << num(r.cap.strength) << (r.cap_tuned ? " (reflection scan)" : "") << "\n\n"
    << "b = " << num(c.b) << "  c0 = " << num(c.c0) << "  <Y G0 Y> = " << num(c.yg0y) << "\n"
    << "b~ = " << num(c.btil) << "  alpha_-1 = " << num(c.alpha_m1) << "  beta_-1 = " << num(c.beta_m1)
    << "  nu = " << c.nu << "\n"
    << "X = (" << num(c.x[0]) << ", " << num(c.x[1]) << ", " << num(c.x[2]) << ")\n\n";
  s << "lambda        x0(pred)      x0(F)         Gamma(pred)   Gamma(F)      Gamma(t)      F/pred\n";
  for (const auto& row : r.rows) {
    char buf[256];
    auto v = [](const std::optional<ResonanceEstimate>& e, bool g) {
      return e ? (g ? e->gamma : e->x0) : std::nan("");
    };
    const double ratio = row.feshbach && row.predictor && row.predictor->gamma > 0.0
                             ? row.feshbach->gamma / row.predictor->gamma
                             : std::nan("");
    std::snprintf(buf, sizeof buf, "%-13.6g %-13.6g %-13.6g %-13.6g %-13.6g %-13.6g %-10.4g\n", row.lambda,
                  v(row.predictor, false), v(row.feshbach, false), v(row.predictor, true), v(row.feshbach, true),
                  v(row.time_fit, true), ratio);
    s << buf;
    if (!row.feshbach_error.empty()) s << "    feshbach: " << row.feshbach_error << "\n";
    if (!row.time_fit_error.empty()) s << "    time fit: " << row.time_fit_error << "\n";
  }
  auto fitline = [&](const char* name, const PowerFit& f) {
    s << name << ": ";
    if (f.ok)
      s << "slope " << num(f.slope) << ", R^2 " << num(f.r_squared) << " over |lambda| in [" << num(f.x_min) << ", "
        << num(f.x_max) << "]\n";
    else
      s << "refused (" << f.reason << ")\n";
  };
  s << "\n";
  fitline("log Gamma_F vs log lambda", r.gamma_fit);
  fitline("log x0_F vs log lambda   ", r.x0_fit);
  fitline("log Gamma_pred vs log lam", r.predictor_gamma_fit);
  if (!r.warnings.empty()) {
    s << "\nwarnings:\n";
    for (const auto& w : r.warnings) s << "  - " << w << "\n";
  }
  return s.str();
}

void emit_report(const SweepResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "plotdata", ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
  };

  {
    auto out = open(dir / "sweep.csv");
    out << "lambda,epsilon,x0_predictor,gamma_predictor,x0_feshbach,x0_feshbach_unc,gamma_feshbach,"
           "gamma_feshbach_unc,feshbach_valid,x0_timefit,x0_timefit_unc,gamma_timefit,gamma_timefit_unc,"
           "timefit_valid,gap_ratio,sup_deviation\n";
    for (const auto& row : r.rows) {
      using E = ResonanceEstimate;
      out << num(row.lambda) << ',' << num(row.epsilon) << ',' << opt_num(row.predictor, &E::x0) << ','
          << opt_num(row.predictor, &E::gamma) << ',' << opt_num(row.feshbach, &E::x0) << ','
          << opt_num(row.feshbach, &E::x0_uncertainty) << ',' << opt_num(row.feshbach, &E::gamma) << ','
          << opt_num(row.feshbach, &E::gamma_uncertainty) << ','
          << (row.feshbach ? (row.feshbach->valid ? "1" : "0") : "") << ',' << opt_num(row.time_fit, &E::x0) << ','
          << opt_num(row.time_fit, &E::x0_uncertainty) << ',' << opt_num(row.time_fit, &E::gamma) << ','
          << opt_num(row.time_fit, &E::gamma_uncertainty) << ','
          << (row.time_fit ? (row.time_fit->valid ? "1" : "0") : "") << ',' << num(row.gap_ratio) << ','
          << (row.trace ? num(row.sup_deviation) : "") << '\n';
    }
  }
  {
    auto out = open(dir / "plotdata" / "gamma_vs_lambda.csv");
    out << "lambda,gamma_predictor,gamma_feshbach,gamma_timefit\n";
    for (const auto& row : r.rows)
      out << num(row.lambda) << ',' << opt_num(row.predictor, &ResonanceEstimate::gamma) << ','
          << opt_num(row.feshbach, &ResonanceEstimate::gamma) << ','
          << opt_num(row.time_fit, &ResonanceEstimate::gamma) << '\n';
  }
  {
    auto out = open(dir / "plotdata" / "x0_vs_lambda.csv");
    out << "lambda,x0_predictor,x0_feshbach,x0_timefit\n";
    for (const auto& row : r.rows)
      out << num(row.lambda) << ',' << opt_num(row.predictor, &ResonanceEstimate::x0) << ','
          << opt_num(row.feshbach, &ResonanceEstimate::x0) << ',' << opt_num(row.time_fit, &ResonanceEstimate::x0)
          << '\n';
  }
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    if (r.rows[i].trace)
      write_trace_csv(*r.rows[i].trace, dir / "plotdata" / ("trace_lambda_" + num(r.rows[i].lambda) + ".csv"));

  nlohmann::ordered_json m;
  m["tool_version"] = kToolVersion;
  m["config_hash"] = r.config_hash;
  m["model_hash"] = r.model_hash;
  {
    nlohmann::ordered_json cfg;
    std::istringstream in(r.config.canonical());
    for (std::string line; std::getline(in, line);) {
      const auto eq = line.find(" = ");
      cfg[line.substr(0, eq)] = line.substr(eq + 3);
    }
    m["config"] = cfg;
  }
  m["model"] = {{"coupling", r.potential.coupling},
                {"e0", r.e0},
                {"residual", r.residual},
                {"gap", r.gap},
                {"tol_eig", r.tol_eig},
                {"spectral_scale", r.scale},
                {"parity", {r.parity[0], r.parity[1], r.parity[2]}},
                {"nearby", r.nearby}};
  const auto& c = r.coeffs;
  m["coefficients"] = {{"b", c.b},
                       {"X", {c.x[0], c.x[1], c.x[2]}},
                       {"c0", c.c0},
                       {"yg0y", c.yg0y},
                       {"btil", c.btil},
                       {"alpha_m1", c.alpha_m1},
                       {"beta_m1", c.beta_m1},
                       {"nu", c.nu},
                       {"tol_c", c.tol_c},
                       {"b_minus_2yg0y_positive", c.b_minus_2yg0y_positive},
                       {"btil_positive", c.btil_positive},
                       {"max_solve_residual", c.max_solve_residual}};
  const auto& a = r.assumptions;
  m["assumptions"] = {{"potential_decay", decay_json(a.potential_decay)},
                      {"vector_potential_decay", decay_json(a.vector_potential_decay)},
                      {"div_b_max", a.div_b_max},
                      {"linear_term_residuals", {a.linear_term_residuals[0], a.linear_term_residuals[1], a.linear_term_residuals[2]}},
                      {"simplicity_gap", a.simplicity_gap},
                      {"psi0_decay", decay_json(a.psi0_decay)},
                      {"resonance_heuristic", a.resonance_heuristic_pass ? "pass" : "warn"},
                      {"thresholds",
                       {{"decay", a.decay_threshold},
                        {"linear_term", a.linear_term_threshold},
                        {"psi0_decay", a.psi0_decay_threshold}}}};
  m["cap"] = {{"onset", r.cap.onset}, {"width", r.cap.width}, {"strength", r.cap.strength}, {"tuned", r.cap_tuned}};
  m["zero_field"] = r.zero_field;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json j;
    j["lambda"] = row.lambda;
    j["epsilon"] = row.epsilon;
    j["predictor"] = estimate_json(row.predictor, row.predictor_error);
    j["feshbach"] = estimate_json(row.feshbach, row.feshbach_error);
    j["time_fit"] = estimate_json(row.time_fit, row.time_fit_error);
    if (row.window)
      j["window"] = {{"lo", row.window->lo},
                     {"hi", row.window->hi},
                     {"r", row.window->r},
                     {"eta_ladder", row.window->eta_ladder},
                     {"eta_cap", row.window->eta_cap},
                     {"slack", row.window->slack()},
                     {"half_length", row.window->half_length}};
    if (row.time_fit)
      j["fit_window"] = {{"t_lo", row.fit_window.t_lo},
                         {"t_hi", row.fit_window.t_hi},
                         {"points", row.fit_window.points},
                         {"rms", row.fit_window.rms}};
    if (row.trace) {
      j["trace"] = {{"samples", row.trace->t.size()},
                    {"t_max", row.trace->t.back()},
                    {"error_budget", row.trace->error_budget.back()},
                    {"cap", row.trace->cap},
                    {"sup_deviation", row.sup_deviation}};
    }
    j["gap_ratio"] = std::isfinite(row.gap_ratio) ? nlohmann::ordered_json(row.gap_ratio) : "inf";
    j["gap_warning"] = row.gap_warning;
    j["cap_reflection"] = row.cap_reflection;
    rows.push_back(j);
  }
  m["rows"] = rows;
  m["fits"] = {{"gamma_feshbach", fit_json(r.gamma_fit)},
               {"x0_feshbach", fit_json(r.x0_fit)},
               {"gamma_predictor", fit_json(r.predictor_gamma_fit)}};
  m["warnings"] = r.warnings;
  {
    auto out = open(dir / "manifest.json");
    out << m.dump(2) << '\n';
  }
  {
    auto out = open(dir / "summary.txt");
    out << summary_text(r);
  }
}

}  // namespace mtr
