#include "mtr/dynamics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mtr {

PropagatorMethod parse_propagator_method(std::string_view tag) {
  if (tag == "krylov-arnoldi") return PropagatorMethod::krylov_arnoldi;
  if (tag == "chebyshev") return PropagatorMethod::chebyshev;
  throw ConfigError("unknown propagator method '" + std::string(tag) + "'");
}

std::string_view to_string(PropagatorMethod m) {
  return m == PropagatorMethod::chebyshev ? "chebyshev" : "krylov-arnoldi";
}

namespace {

using Eigen::MatrixXcd;

struct StepOutcome {
  double tau = 0.0;
  double error = 0.0;  // grid norm
  int matvecs = 0;
};

// One accepted Krylov step of length at most tau_max; u is overwritten.
StepOutcome krylov_step(const LatticeOperator& h, Vec& u, double tau_max, const PropagatorSpec& spec,
                        std::vector<Vec>& V) {
  const std::size_t N = u.size();
  const int m_max = std::max(2, spec.max_dim);
  const double wnorm = std::sqrt(h.grid().cell_volume());
  StepOutcome out;
  const double beta = norm2(u);
  if (beta == 0.0) {
    out.tau = tau_max;
    return out;
  }
  if (V.size() < static_cast<std::size_t>(m_max) + 1) V.assign(static_cast<std::size_t>(m_max) + 1, Vec(N));
  MatrixXcd H = MatrixXcd::Zero(m_max + 1, m_max);
  for (std::size_t i = 0; i < N; ++i) V[0][i] = u[i] / beta;

  // Error of exp(-i tau H_m) at dimension m; returns -1 if not acceptable for any tau >= tau_floor.
  auto try_dim = [&](int m, bool breakdown, double& tau, MatrixXcd& y) {
    for (double t = tau; t >= 1e-12 * tau_max; t *= 0.5) {
      MatrixXcd M = MatrixXcd::Zero(m + 1, m + 1);
      M.topLeftCorner(m, m) = cplx(0.0, -t) * H.topLeftCorner(m, m);
      M(0, m) = 1.0;
      const MatrixXcd E = M.exp();
      const double err =
          breakdown ? 0.0 : beta * std::abs(H(m, m - 1)) * t * std::abs(E(m - 1, m)) * wnorm;
      if (err <= spec.tol) {
        tau = t;
        y = beta * E.topLeftCorner(m, 1);
        out.error = err;
        return true;
      }
      if (m < m_max) return false;  // grow the basis before shrinking the step
    }
    return false;
  };

  for (int j = 0; j < m_max; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    h.apply(V[uj], V[uj + 1]);
    ++out.matvecs;
    for (int i = 0; i <= j; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const cplx c = dot(V[ui], V[uj + 1]);
      H(i, j) = c;
      axpy(-c, V[ui], V[uj + 1]);
    }
    const double hn = norm2(V[uj + 1]);
    H(j + 1, j) = hn;
    const bool breakdown = hn <= 1e-14 * beta;
    if (!breakdown) scale(1.0 / hn, V[uj + 1]);
    const int m = j + 1;
    if (breakdown || m == m_max || (m >= 8 && m % 4 == 0)) {
      double tau = tau_max;
      MatrixXcd y;
      if (try_dim(m, breakdown, tau, y)) {
        std::fill(u.begin(), u.end(), cplx{0.0, 0.0});
        for (int i = 0; i < m; ++i) axpy(y(i, 0), V[static_cast<std::size_t>(i)], u);
        out.tau = tau;
        return out;
      }
      if (breakdown) break;
    }
  }
  std::ostringstream msg;
  msg << "Krylov propagator: tolerance " << spec.tol << " unreachable with dimension " << m_max;
  throw NumericalError(msg.str());
}

struct ChebyshevFrame {
  double center = 0.0;
  double radius = 0.0;
};

StepOutcome chebyshev_step(const LatticeOperator& h, const ChebyshevFrame& fr, Vec& u, double tau_max,
                           const PropagatorSpec& spec) {
  const std::size_t N = u.size();
  const double unorm = norm2(u) * std::sqrt(h.grid().cell_volume());
  StepOutcome out;
  for (double tau = tau_max; tau >= 1e-12 * tau_max; tau *= 0.5) {
    const double x = fr.radius * tau;
    // Smallest degree whose Bessel tail meets the tolerance.
    int deg = -1;
    double tail = 0.0;
    for (int k = static_cast<int>(x); k <= spec.max_dim; ++k) {
      double s = 0.0;
      for (int j = k + 1; j <= k + 40; ++j) s += 2.0 * std::abs(std::cyl_bessel_j(static_cast<double>(j), x));
      if (s * unorm <= spec.tol) {
        deg = k;
        tail = s * unorm;
        break;
      }
    }
    if (deg < 0) continue;
    Vec t0 = u, t1(N), t2(N), acc(N);
    const cplx phase = std::exp(cplx(0.0, -fr.center * tau));
    auto coef = [&](int k) {
      const cplx ik = std::pow(cplx(0.0, -1.0), k);
      return (k == 0 ? 1.0 : 2.0) * ik * std::cyl_bessel_j(static_cast<double>(k), x);
    };
    auto apply_scaled = [&](const Vec& in, Vec& o) {
      h.apply(in, o);
      ++out.matvecs;
      for (std::size_t s = 0; s < N; ++s) o[s] = (o[s] - fr.center * in[s]) / fr.radius;
    };
    for (std::size_t s = 0; s < N; ++s) acc[s] = coef(0) * t0[s];
    if (deg >= 1) {
      apply_scaled(t0, t1);
      axpy(coef(1), t1, acc);
    }
    for (int k = 2; k <= deg; ++k) {
      apply_scaled(t1, t2);
      for (std::size_t s = 0; s < N; ++s) t2[s] = 2.0 * t2[s] - t0[s];
      axpy(coef(k), t2, acc);
      std::swap(t0, t1);
      std::swap(t1, t2);
    }
    for (std::size_t s = 0; s < N; ++s) u[s] = phase * acc[s];
    out.tau = tau;
    out.error = tail;
    return out;
  }
  std::ostringstream msg;
  msg << "Chebyshev propagator: tolerance " << spec.tol << " unreachable with degree " << spec.max_dim;
  throw NumericalError(msg.str());
}

}  // namespace

PropagationResult propagate(const LatticeOperator& h, const ComplexField& u0, const PropagatorSpec& spec, double T,
                            const std::vector<double>& sample_times, const SampleCallback& callback) {
  require_same_grid(h.grid(), u0.grid());
  if (!(spec.dt > 0.0) || !(spec.tol > 0.0) || spec.max_dim < 2) throw ConfigError("invalid propagator spec");
  if (!(T >= 0.0)) throw ConfigError("propagation time must be >= 0");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) throw ConfigError("sample times must ascend");
  if (!sample_times.empty() && (sample_times.front() < 0.0 || sample_times.back() > T * (1.0 + 1e-12)))
    throw ConfigError("sample times must lie in [0, T]");
  ChebyshevFrame frame;
  if (spec.method == PropagatorMethod::chebyshev) {
    if (!h.hermitian()) throw ConfigError("Chebyshev propagation needs a Hermitian operator (CAP off)");
    const auto [lo, hi] = h.matrix().gershgorin_interval();
    frame.center = 0.5 * (lo + hi);
    frame.radius = 0.5 * (hi - lo) * 1.01 + 1e-12;
  }
  PropagationResult res;
  Vec u(u0.values().begin(), u0.values().end());
  std::vector<Vec> basis;
  double t = 0.0;
  double tau_hint = spec.dt;
  auto emit = [&](double ts) {
    if (callback) callback(ts, ComplexField(u0.grid(), u), res.error_budget);
  };
  std::vector<double> targets = sample_times;
  if (targets.empty() || targets.back() < T) targets.push_back(T);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double target = targets[k];
    while (target - t > 1e-14 * std::max(1.0, target)) {
      const double tau_max = std::min({spec.dt, target - t, 2.0 * tau_hint});
      const StepOutcome st = spec.method == PropagatorMethod::chebyshev
                                 ? chebyshev_step(h, frame, u, tau_max, spec)
                                 : krylov_step(h, u, tau_max, spec, basis);
      t += st.tau;
      tau_hint = st.tau;
      ++res.steps;
      res.matvecs += st.matvecs;
      res.error_budget += st.error;
      res.max_step_error = std::max(res.max_step_error, st.error);
    }
    t = target;
    if (k < sample_times.size()) emit(target);
  }
  res.state = ComplexField(u0.grid(), std::move(u));
  res.time = t;
  return res;
}

std::vector<double> log_spaced_times(double T, int samples) {
  if (!(T > 0.0) || samples < 2) throw ConfigError("log-spaced sampling needs T > 0 and at least 2 samples");
  std::vector<double> t{0.0};
  const double t0 = 1e-4 * T;
  for (int k = 0; k < samples; ++k) t.push_back(t0 * std::pow(T / t0, static_cast<double>(k) / (samples - 1)));
  t.back() = T;
  return t;
}

LatticeOperator survival_operator(const ThresholdModel& model, const VectorField& a, double lambda,
                                  const PropagatorSpec& spec, const CapSpec& cap) {
  LatticeOperator h = assemble_h_lambda(model.v, a, lambda);
  if (spec.cap) h = h.plus(assemble_cap(cap, model.grid()));
  return h;
}

namespace {

SurvivalTrace run_trace(const LatticeOperator& h, const ComplexField& u0, const ComplexField& psi,
                        const PropagatorSpec& spec, double T, int samples) {
  SurvivalTrace tr;
  const auto times = log_spaced_times(T, samples);
  propagate(h, u0, spec, T, times, [&](double t, const ComplexField& u, double budget) {
    tr.t.push_back(t);
    tr.amplitude.push_back(inner_product(psi, u));
    tr.norm.push_back(std::sqrt(inner_product(u, u).real()));
    tr.error_budget.push_back(budget);
  });
  return tr;
}

}  // namespace

SurvivalTrace survival_amplitude(const ThresholdModel& model, const VectorField& a, double lambda,
                                 const PropagatorSpec& spec, double T, int samples, const CapSpec& cap) {
  const LatticeOperator h = survival_operator(model, a, lambda, spec, cap);
  const ComplexField psi = to_complex(model.psi0);
  SurvivalTrace tr = run_trace(h, psi, psi, spec, T, samples);
  tr.lambda = lambda;
  tr.cap = spec.cap;
  tr.cap_spec = cap;
  return tr;
}

double window_function(double x, double lo, double hi, double mollify_fraction) {
  const double d = mollify_fraction * (hi - lo) / 2.0;
  return 0.5 * (std::tanh((x - lo) / d) - std::tanh((x - hi) / d));
}

FilteredState apply_window_filter(const LatticeOperator& h, const ComplexField& f, double lo, double hi,
                                  const FilterOptions& opts) {
  if (!h.hermitian()) throw ConfigError("spectral filter needs a Hermitian operator");
  if (!(hi > lo)) throw ConfigError("filter window must have hi > lo");
  require_same_grid(h.grid(), f.grid());
  const std::size_t N = f.size();
  const double fnorm = norm2(f.values());
  FilteredState out;
  if (fnorm == 0.0) {
    out.state = ComplexField(f.grid());
    return out;
  }
  std::vector<double> alpha, beta;
  auto lanczos = [&](int steps, const std::function<void(int, const Vec&)>& visit) {
    Vec q(f.values().begin(), f.values().end()), qprev(N, cplx{0.0, 0.0}), w(N);
    scale(1.0 / fnorm, q);
    for (int j = 0; j < steps; ++j) {
      visit(j, q);
      h.apply(q, w);
      if (j > 0) axpy(-beta[static_cast<std::size_t>(j) - 1], qprev, w);
      const double a = dot(q, w).real();
      axpy(-a, q, w);
      const double b = norm2(w);
      if (static_cast<std::size_t>(j) == alpha.size()) {
        alpha.push_back(a);
        beta.push_back(b);
      }
      if (b <= 1e-13 * std::abs(a) || j + 1 == steps) return j + 1;
      qprev.swap(q);
      for (std::size_t s = 0; s < N; ++s) q[s] = w[s] / b;
    }
    return steps;
  };
  auto coefficients = [&](int m) {
    Eigen::VectorXd d(m), e(std::max(0, m - 1));
    for (int i = 0; i < m; ++i) d(i) = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) e(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    Eigen::VectorXd g(m);
    for (int i = 0; i < m; ++i) g(i) = window_function(es.eigenvalues()(i), lo, hi, opts.mollify_fraction);
    const Eigen::VectorXd first = es.eigenvectors().row(0).transpose();
    return Eigen::VectorXd(es.eigenvectors() * g.cwiseProduct(first));
  };

  // A polynomial cannot resolve the transition width d over a spectrum of
  // half-width R below degree ~ sqrt(R / d); earlier agreement is spurious.
  const auto [slo, shi] = h.matrix().gershgorin_interval();
  const double d = opts.mollify_fraction * (hi - lo) / 2.0;
  const int min_degree = static_cast<int>(std::ceil(std::sqrt(0.5 * (shi - slo) / d)));
  if (min_degree > opts.max_steps) {
    std::ostringstream msg;
    msg << "spectral filter: polynomial degree budget " << opts.max_steps << " exceeded (window needs >= "
        << min_degree << ")";
    throw NumericalError(msg.str());
  }
  // Pass 1: grow the tridiagonal matrix until g(T) e1 settles.
  Eigen::VectorXd y, prev;
  int m = 0;
  bool converged = false;
  for (int target = opts.check_every; target <= opts.max_steps; target += opts.check_every) {
    const int got = lanczos(target, [](int, const Vec&) {});
    alpha.resize(static_cast<std::size_t>(got));
    beta.resize(static_cast<std::size_t>(got));
    m = got;
    y = coefficients(m);
    if (prev.size() > 0) {
      Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
      padded.head(prev.size()) = prev;
      if (m >= min_degree && (y - padded).norm() <= opts.tol) {
        converged = true;
        break;
      }
    }
    if (got < target) {
      converged = true;  // invariant subspace
      break;
    }
    prev = y;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "spectral filter: polynomial degree budget " << opts.max_steps << " exceeded";
    throw NumericalError(msg.str());
  }
  // Pass 2: rebuild the Lanczos vectors and accumulate sum y_j q_j.
  Vec acc(N, cplx{0.0, 0.0});
  lanczos(m, [&](int j, const Vec& q) { axpy(fnorm * y(j), q, acc); });
  out.state = ComplexField(f.grid(), std::move(acc));
  out.mass = inner_product(f, out.state).real();
  out.steps = m;
  return out;
}

SurvivalTrace windowed_survival(const ThresholdModel& model, const VectorField& a, double lambda,
                                const ResonanceEstimate& est, double half_length, const PropagatorSpec& spec,
                                double T, int samples, const CapSpec& cap, const FilterOptions& fopts) {
  if (!(half_length > 0.0)) throw ConfigError("window half-length must be > 0");
  const double lo = est.x0 - half_length, hi = est.x0 + half_length;
  const LatticeOperator hl = assemble_h_lambda(model.v, a, lambda);
  const ComplexField psi = to_complex(model.psi0);
  const FilteredState fs = apply_window_filter(hl, psi, lo, hi, fopts);
  const LatticeOperator h = spec.cap ? hl.plus(assemble_cap(cap, model.grid())) : hl;
  SurvivalTrace tr = run_trace(h, fs.state, psi, spec, T, samples);
  tr.lambda = lambda;
  tr.cap = spec.cap;
  tr.cap_spec = cap;
  tr.windowed = true;
  tr.window_lo = lo;
  tr.window_hi = hi;
  tr.mollifier = fopts.mollify_fraction * (hi - lo);
  tr.filter_mass = fs.mass;
  tr.filter_steps = fs.steps;
  return tr;
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0, slope_err = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, std::size_t i0, std::size_t i1) {
  LineFit f;
  const double n = static_cast<double>(i1 - i0);
  double sx = 0, sy = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  f.rms = std::sqrt(ssr / n);
  f.slope_err = (n > 2 && sxx > 0.0) ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  return f;
}

}  // namespace

ExponentialFit fit_exponential(const SurvivalTrace& trace, const FitOptions& opts) {
  std::vector<double> t, la, ph;
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    const double m = std::abs(trace.amplitude[k]);
    if (trace.t[k] <= 0.0 || !(m > 1e-300)) continue;
    t.push_back(trace.t[k]);
    la.push_back(std::log(m));
    const double raw = std::arg(trace.amplitude[k]);
    if (ph.empty()) {
      ph.push_back(raw);
      continue;
    }
    const std::size_t j = ph.size();
    const double s = j >= 2 ? (ph[j - 1] - ph[j - 2]) / (t[j - 1] - t[j - 2]) : 0.0;
    const double pred = ph[j - 1] + s * (t[j] - t[j - 1]);
    ph.push_back(raw + 2.0 * std::numbers::pi * std::round((pred - raw) / (2.0 * std::numbers::pi)));
  }
  if (t.size() < static_cast<std::size_t>(std::max(3, opts.min_points)))
    throw NumericalError("exponential fit: too few usable samples");

  auto index_range = [&](double a, double b) {
    const auto i0 = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), a) - t.begin());
    const auto i1 = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), b) - t.begin());
    return std::pair{i0, i1};
  };
  ExponentialFit out;
  FitWindow best{t.front(), t.back(), static_cast<int>(t.size()), fit_line(t, la, 0, t.size()).rms};
  double gamma = -fit_line(t, la, 0, t.size()).slope;
  const double t_end = t.back();
  const double tiny = 1e-12 / t_end;
  for (int pass = 0; pass < 3 && gamma > tiny; ++pass) {
    out.candidates.clear();
    bool found = false;
    FitWindow pick;
    for (double fa : {0.1, 0.2, 0.3})
      for (double fb : {1.0, 2.0, 3.0}) {
        const double a = fa / gamma, b = std::min(fb / gamma, t_end);
        if (b <= a) continue;
        const auto [i0, i1] = index_range(a, b);
        if (i1 < i0 + static_cast<std::size_t>(opts.min_points)) continue;
        const LineFit lf = fit_line(t, la, i0, i1);
        FitWindow w{t[i0], t[i1 - 1], static_cast<int>(i1 - i0), lf.rms};
        out.candidates.push_back(w);
        if (!found || w.rms < pick.rms || (w.rms == pick.rms && w.points > pick.points)) {
          pick = w;
          found = true;
        }
      }
    if (!found) {
      // Short trace: keep the tail beyond the early Zeno region.
      const auto [i0, i1] = index_range(std::min(0.1 / gamma, t_end), t_end);
      const std::size_t lo = i1 >= i0 + static_cast<std::size_t>(opts.min_points)
                                 ? i0
                                 : t.size() - std::min(t.size(), static_cast<std::size_t>(opts.min_points));
      pick = FitWindow{t[lo], t_end, static_cast<int>(t.size() - lo), fit_line(t, la, lo, t.size()).rms};
    }
    best = pick;
    const auto [i0, i1] = index_range(best.t_lo, best.t_hi);
    gamma = -fit_line(t, la, i0, i1).slope;
  }
  const auto [i0, i1] = index_range(best.t_lo, best.t_hi);
  for (std::size_t i = i0 + 1; i < i1; ++i)
    if (la[i] - la[i - 1] > std::log1p(opts.monotone_tol)) {
      std::ostringstream msg;
      msg << "exponential fit refused: |A| rises by more than " << opts.monotone_tol * 100
          << "% between t = " << t[i - 1] << " and t = " << t[i] << " (background dominates)";
      throw NumericalError(msg.str());
    }
  const LineFit lm = fit_line(t, la, i0, i1);
  const LineFit lp = fit_line(t, ph, i0, i1);
  out.window = best;
  ResonanceEstimate& e = out.estimate;
  e.method = EstimateMethod::time_fit;
  e.lambda = trace.lambda;
  e.epsilon = trace.lambda * trace.lambda;
  e.gamma = -lm.slope;
  e.x0 = -lp.slope;
  e.gamma_uncertainty = lm.slope_err;
  e.x0_uncertainty = lp.slope_err;
  out.short_window = !(e.gamma > 0.0) || t_end * e.gamma < 2.0;
  if (!(e.gamma > 0.0)) {
    e.valid = false;
    e.note = "no decay";
  }
  return out;
}

void write_trace_csv(const SurvivalTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t,re,im,abs2,norm,error_budget\n";
  char buf[256];
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    const cplx a = trace.amplitude[k];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", trace.t[k], a.real(), a.imag(),
                  std::norm(a), trace.norm[k], trace.error_budget[k]);
    out << buf;
  }
}

}  // namespace mtr
