#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mtr/harness.hpp"

using namespace mtr;

namespace {

struct Common {
  std::string config;
  std::string out;
  int jobs = 1;
  std::vector<double> only;
  bool skip_timefit = false;
};

ExperimentConfig read_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

std::vector<double> lambdas_of(const Common& c, const ExperimentConfig& cfg) {
  return c.only.empty() ? cfg.lambdas : c.only;
}

void print_coefficients(const ResonanceCoefficients& k) {
  std::printf("b        %.12g\nX        %.12g %.12g %.12g\nc0       %.12g\nyg0y     %.12g\nb~       %.12g\n"
              "alpha_-1 %.12g\nbeta_-1  %.12g\nnu       %d\nb - 2 yg0y > 0: %s\nb~ > 0: %s\n",
              k.b, k.x[0], k.x[1], k.x[2], k.c0, k.yg0y, k.btil, k.alpha_m1, k.beta_m1, k.nu,
              k.b_minus_2yg0y_positive ? "yes" : "no", k.btil_positive ? "yes" : "no");
}

struct Prepared {
  ThresholdModel model;
  VectorField a;
  ResonanceCoefficients coeffs;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p{obtain_model(cfg, &std::cerr), {}, {}};
  p.a = eval_vector_potential(cfg.vector_potential, p.model.grid());
  p.coeffs = compute_coefficients(p.model, p.a, cfg.tol_solve);
  p.coeffs.tol_c = cfg.tol_c_relative * p.coeffs.b * p.coeffs.b;
  p.coeffs.nu = classify_nu(p.coeffs, p.coeffs.tol_c);
  return p;
}

int cmd_tune(const Common& c) {
  ExperimentConfig cfg = read_config(c);
  const auto dir = cfg.model_dir.empty() ? cfg.output_dir / "model" : cfg.model_dir;
  const ThresholdModel m = tune_coupling(cfg.potential, cfg.grid(), cfg.parity, cfg.tuning());
  save_model(m, dir);
  std::printf("coupling %.15g\nE0 %.6g (tol %.3g)\ngap %.6g\nresidual %.3g\nmodel written to %s\n",
              m.potential.coupling, m.e0, m.tol_eig, m.gap, m.residual, dir.string().c_str());
  return 0;
}

int cmd_coeffs(const Common& c) {
  const ExperimentConfig cfg = read_config(c);
  const Prepared p = prepare(cfg);
  print_coefficients(p.coeffs);
  return 0;
}

int cmd_check(const Common& c) {
  const ExperimentConfig cfg = read_config(c);
  const Prepared p = prepare(cfg);
  const AssumptionReport r = check_assumptions(p.model.v, p.a, p.model, cfg.cap().onset);
  std::printf("beta1 fit   %.4g (R^2 %.4f)  [> %.3g]\n", r.potential_decay.exponent, r.potential_decay.r_squared,
              r.decay_threshold);
  std::printf("beta2 fit   %.4g (R^2 %.4f)  [> %.3g]\n", r.vector_potential_decay.exponent,
              r.vector_potential_decay.r_squared, r.decay_threshold);
  std::printf("max |div B| %.3g\n", r.div_b_max);
  std::printf("linear term %.3g %.3g %.3g  [<= %.3g]\n", r.linear_term_residuals[0], r.linear_term_residuals[1],
              r.linear_term_residuals[2], r.linear_term_threshold);
  std::printf("gap         %.6g\n", r.simplicity_gap);
  std::printf("psi0 decay  %.4g  [>= %.3g]\n", r.psi0_decay.exponent, r.psi0_decay_threshold);
  std::printf("zero-resonance heuristic: %s\n", r.resonance_heuristic_pass ? "pass" : "warn");
  print_coefficients(p.coeffs);
  check_gate(p.coeffs);
  return 0;
}

int cmd_feshbach(const Common& c) {
  const ExperimentConfig cfg = read_config(c);
  const Prepared p = prepare(cfg);
  const CapSpec cap = resolve_cap(cfg, p.model.grid(), p.coeffs);
  check_gate(p.coeffs);
  std::printf("lambda,x0,x0_unc,gamma,gamma_unc,valid,x0_pred,gamma_pred\n");
  int status = 0;
  for (double l : lambdas_of(c, cfg)) {
    try {
      const ResonanceEstimate e = feshbach_estimate(p.model, p.a, p.coeffs, l, cap, cfg.tol_solve);
      const ResonanceEstimate q = predict_asymptotic(p.coeffs, l);
      std::printf("%.6g,%.12g,%.3g,%.12g,%.3g,%d,%.12g,%.12g\n", l, e.x0, e.x0_uncertainty, e.gamma,
                  e.gamma_uncertainty, e.valid ? 1 : 0, q.x0, q.gamma);
    } catch (const NumericalError& e) {
      std::fprintf(stderr, "lambda %.6g: %s\n", l, e.what());
      status = 3;
    }
  }
  return status;
}

int cmd_propagate(const Common& c) {
  const ExperimentConfig cfg = read_config(c);
  const Prepared p = prepare(cfg);
  const CapSpec cap = resolve_cap(cfg, p.model.grid(), p.coeffs);
  std::filesystem::create_directories(cfg.output_dir);
  for (double l : lambdas_of(c, cfg)) {
    double T = cfg.t_max_time;
    if (p.coeffs.nu == -1 && p.coeffs.btil > 0.0 && p.coeffs.beta_m1 > 0.0)
      T = std::min(T, 5.0 / predict_asymptotic(p.coeffs, l).gamma);
    const SurvivalTrace tr = survival_amplitude(p.model, p.a, l, cfg.propagator_spec(), T, cfg.samples, cap);
    char name[64];
    std::snprintf(name, sizeof name, "trace_lambda_%.6g.csv", l);
    write_trace_csv(tr, cfg.output_dir / name);
    std::printf("lambda %.6g: t_max %.6g, |A(T)| %.6g, error budget %.3g -> %s\n", l, tr.t.back(),
                std::abs(tr.amplitude.back()), tr.error_budget.back(), (cfg.output_dir / name).string().c_str());
    try {
      const ExponentialFit f = fit_exponential(tr);
      std::printf("  time fit: x0 %.8g +- %.2g, Gamma %.8g +- %.2g over [%.4g, %.4g]%s\n", f.estimate.x0,
                  f.estimate.x0_uncertainty, f.estimate.gamma, f.estimate.gamma_uncertainty, f.window.t_lo,
                  f.window.t_hi, f.short_window ? " (short window)" : "");
    } catch (const NumericalError& e) {
      std::printf("  time fit refused: %s\n", e.what());
    }
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = read_config(c);
  RunOptions o;
  o.jobs = c.jobs;
  if (!c.only.empty()) o.only = c.only;
  o.skip_timefit = c.skip_timefit;
  o.log = &std::cerr;
  const SweepResult r = run_sweep(cfg, o);
  emit_report(r, cfg.output_dir);
  std::cout << summary_text(r);
  return 0;
}

int cmd_report(const Common& c) {
  const std::filesystem::path dir = c.out.empty() ? read_config(c).output_dir : std::filesystem::path(c.out);
  std::ifstream in(dir / "summary.txt");
  if (!in) throw ConfigError("no summary.txt in " + dir.string() + "; run 'mtr sweep' first");
  std::cout << in.rdbuf();
  std::ifstream mf(dir / "manifest.json");
  if (mf) {
    const auto m = nlohmann::json::parse(mf);
    std::cout << "\ntool version " << m.value("tool_version", "?") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic threshold resonance laboratory"};
  app.require_subcommand(1);
  Common c;
  auto add = [&](const char* name, const char* help, bool sweep_flags) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", c.config, "Experiment config (key = value)")->check(CLI::ExistingFile);
    s->add_option("--out", c.out, "Output directory");
    if (sweep_flags) {
      s->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
      s->add_option("--only", c.only, "Restrict to these lambda values")->delimiter(',');
      s->add_flag("--skip-timefit", c.skip_timefit, "Skip real-time propagation");
    }
    return s;
  };
  auto* tune = add("tune", "Tune the coupling and save the threshold model", false);
  auto* coeffs = add("coeffs", "Compute the resonance coefficients", false);
  auto* fesh = add("feshbach", "Locate resonances from F(z, eps)", true);
  auto* prop = add("propagate", "Propagate and fit survival amplitudes", true);
  auto* sweep = add("sweep", "Full lambda sweep with report", true);
  auto* check = add("check-assumptions", "Structural checks and the assumption gate", false);
  auto* report = add("report", "Print the summary of a finished sweep", false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (tune->parsed()) return cmd_tune(c);
    if (coeffs->parsed()) return cmd_coeffs(c);
    if (fesh->parsed()) return cmd_feshbach(c);
    if (prop->parsed()) return cmd_propagate(c);
    if (sweep->parsed()) return cmd_sweep(c);
    if (check->parsed()) return cmd_check(c);
    if (report->parsed()) return cmd_report(c);
  } catch (const AssumptionError& e) {
    std::cerr << "assumption failure: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
