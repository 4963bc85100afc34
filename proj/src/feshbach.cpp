#include "mtr/feshbach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mtr {

namespace {

constexpr int kBlockBudget = 6000;

cplx overlap(const std::vector<double>& psi, std::span<const cplx> v, double hv) {
  cplx acc{0.0, 0.0};
  for (std::size_t s = 0; s < psi.size(); ++s) acc += psi[s] * v[s];
  return acc * hv;
}

cplx preconditioner_shift(cplx z) { return {z.real(), z.imag() >= 0.0 ? 0.5 : -0.5}; }

}  // namespace

FeshbachProblem::FeshbachProblem(const ThresholdModel& model, const VectorField& a, double lambda,
                                 const CapSpec& cap, double tol_solve)
    : grid_(model.grid()), lambda_(lambda), cap_(cap), tol_(tol_solve) {
  require_same_grid(grid_, a.grid());
  if (!(tol_solve > 0.0)) throw ConfigError("tol_solve must be > 0");
  psi0_.assign(model.psi0.values().begin(), model.psi0.values().end());
  h_ = assemble_h_lambda(model.v, a, lambda);
  cap_diag_ = assemble_cap(cap, grid_).matrix().diagonal_values();
  sigma_ = deflation_shift(assemble_h0(model.v));

  const std::size_t N = grid_.size();
  const double hv = grid_.cell_volume();
  Vec p(psi0_.begin(), psi0_.end());
  phi_.assign(N, cplx{0.0, 0.0});
  h_.apply(p, phi_);
  const cplx d = overlap(psi0_, phi_, hv);
  diag_ = d.real();
  for (std::size_t s = 0; s < N; ++s) phi_[s] -= psi0_[s] * d;
}

Vec FeshbachProblem::solve_block(cplx z, std::span<const cplx> rhs, SolveStats& stats) const {
  const std::size_t N = grid_.size();
  const double hv = grid_.cell_volume();
  const DirichletLaplacianInverse prec(grid_, preconditioner_shift(z));
  Vec tmp(N);
  const LinearMap op = [&](std::span<const cplx> x, std::span<cplx> y) {
    const cplx cx = overlap(psi0_, x, hv);
    for (std::size_t s = 0; s < N; ++s) tmp[s] = x[s] - psi0_[s] * cx;
    h_.apply(tmp, y);
    for (std::size_t s = 0; s < N; ++s) y[s] += cap_diag_[s] * tmp[s];
    const cplx cy = overlap(psi0_, y, hv);
    for (std::size_t s = 0; s < N; ++s) y[s] += psi0_[s] * (sigma_ * cx - cy) - z * x[s];
  };
  Vec u(N, cplx{0.0, 0.0});
  stats = gmres(op, prec.as_map(), rhs, u, SolverOptions{tol_, kBlockBudget, 60});
  if (!stats.converged) {
    std::ostringstream msg;
    msg << "Feshbach block solve did not converge at z = " << z << " (relative residual " << stats.residual
        << " after " << stats.iterations << " iterations)";
    throw NumericalError(msg.str());
  }
  const cplx cu = overlap(psi0_, u, hv);
  for (std::size_t s = 0; s < N; ++s) u[s] -= psi0_[s] * cu;
  return u;
}

FeshbachEvaluation FeshbachProblem::eval(cplx z) const {
  FeshbachEvaluation e;
  e.z = z;
  e.epsilon = epsilon();
  e.cap = cap_;
  if (norm2(phi_) == 0.0) {
    e.F = diag_ - z;
    e.residual = 0.0;
    return e;
  }
  SolveStats st;
  const Vec u = solve_block(z, phi_, st);
  e.F = diag_ - z - dot(phi_, u) * grid_.cell_volume();
  e.residual = st.residual;
  e.iterations = st.iterations;
  return e;
}

cplx FeshbachProblem::resolvent_overlap(cplx z, SolveStats* stats) const {
  const std::size_t N = grid_.size();
  const double hv = grid_.cell_volume();
  const DirichletLaplacianInverse prec(grid_, preconditioner_shift(z));
  Vec tmp(N);
  const LinearMap op = [&](std::span<const cplx> x, std::span<cplx> y) {
    h_.apply(x, y);
    const cplx cx = overlap(psi0_, x, hv);
    for (std::size_t s = 0; s < N; ++s) tmp[s] = cap_diag_[s] * (x[s] - psi0_[s] * cx);
    const cplx ct = overlap(psi0_, tmp, hv);
    for (std::size_t s = 0; s < N; ++s) y[s] += tmp[s] - psi0_[s] * ct - z * x[s];
  };
  Vec b(psi0_.begin(), psi0_.end());
  Vec x(N, cplx{0.0, 0.0});
  const SolveStats st = gmres(op, prec.as_map(), b, x, SolverOptions{tol_, kBlockBudget, 60});
  if (stats) *stats = st;
  if (!st.converged) throw NumericalError("full resolvent solve did not converge");
  return overlap(psi0_, x, hv);
}

double window_exponent(int nu) {
  if (nu == -1) return 2.0;
  if (nu == 1) return 4.0;
  return 0.5 * (nu + 8);
}

ResonanceSearchWindow make_window(const ResonanceCoefficients& coeffs, double epsilon) {
  if (!(coeffs.btil > 0.0)) throw AssumptionError("resonance window is empty: b~ <= 0");
  if (!(epsilon > 0.0)) throw ConfigError("resonance window needs eps > 0");
  ResonanceSearchWindow w;
  const double be = coeffs.btil * epsilon;
  w.epsilon = epsilon;
  w.lo = 0.5 * be;
  w.hi = 1.5 * be;
  w.r = window_exponent(coeffs.nu);
  w.eta_cap = std::pow(be, w.r);
  w.eta_ladder = {0.5 * w.eta_cap, 0.25 * w.eta_cap, 0.125 * w.eta_cap};
  w.half_length = 0.25 * be;
  return w;
}

std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::predictor: return "predictor";
    case EstimateMethod::feshbach: return "feshbach";
    case EstimateMethod::time_fit: return "time-fit";
  }
  return "unknown";
}

cplx richardson(const std::array<cplx, 3>& f) { return (8.0 * f[2] - 6.0 * f[1] + f[0]) / 3.0; }

BoundaryValue boundary_value(const FeshbachProblem& p, double x, const std::array<double, 3>& eta_ladder) {
  BoundaryValue bv;
  bv.x = x;
  for (std::size_t i = 0; i < 3; ++i) {
    const FeshbachEvaluation e = p.eval({x, eta_ladder[i]});
    bv.ladder[i] = e.F;
    bv.max_residual = std::max(bv.max_residual, e.residual);
  }
  bv.F = richardson(bv.ladder);
  bv.uncertainty = std::abs(bv.F - (2.0 * bv.ladder[2] - bv.ladder[1]));
  return bv;
}

ResonanceEstimate locate_resonance(const FeshbachProblem& p, const ResonanceSearchWindow& w,
                                   const LocateOptions& opts) {
  ResonanceEstimate est;
  est.method = EstimateMethod::feshbach;
  est.lambda = p.lambda();
  est.epsilon = p.epsilon();
  const double be = (w.lo + w.hi);  // = 2 b~ eps
  const double xtol = opts.x_tol_rel * 0.5 * be;

  double a = w.lo, b = w.hi;
  BoundaryValue fa = boundary_value(p, a, w.eta_ladder);
  BoundaryValue fb = boundary_value(p, b, w.eta_ladder);
  if (fa.F.real() * fb.F.real() > 0.0) {
    std::ostringstream msg;
    msg << "Re F(x + i0) has no sign change over the window (" << w.lo << ", " << w.hi
        << "): Re F = " << fa.F.real() << ", " << fb.F.real();
    throw NumericalError(msg.str());
  }
  for (int it = 0; it < opts.max_bisect && b - a > xtol; ++it) {
    const double m = 0.5 * (a + b);
    BoundaryValue fm = boundary_value(p, m, w.eta_ladder);
    if ((fm.F.real() > 0.0) == (fa.F.real() > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  const double fra = fa.F.real(), frb = fb.F.real();
  double x = fra == frb ? 0.5 * (a + b) : a - fra * (b - a) / (frb - fra);
  x = std::clamp(x, a, b);
  const BoundaryValue fx = boundary_value(p, x, w.eta_ladder);
  est.x0 = x;
  est.x0_uncertainty = std::max(b - a, std::numeric_limits<double>::epsilon() * std::abs(x));
  est.gamma = -fx.F.imag();
  est.gamma_uncertainty = std::max({fx.uncertainty, fa.uncertainty, fb.uncertainty});
  if (!(est.gamma > 0.0)) {
    est.valid = false;
    est.note = "Gamma <= 0";
  }
  return est;
}

ResonanceEstimate predict_asymptotic(const ResonanceCoefficients& coeffs, double lambda) {
  if (coeffs.nu != -1)
    throw AssumptionError("exceptional case (nu >= 1): predictor coefficients are out of scope");
  if (!(coeffs.btil > 0.0)) throw AssumptionError("predictor needs b~ > 0");
  if (!(coeffs.beta_m1 > 0.0)) throw AssumptionError("predictor needs beta_-1 > 0");
  ResonanceEstimate est;
  est.method = EstimateMethod::predictor;
  est.lambda = lambda;
  est.epsilon = lambda * lambda;
  const double l = std::abs(lambda);
  est.x0 = coeffs.btil * l * l;
  est.gamma = coeffs.beta_m1 / std::sqrt(coeffs.btil) * l * l * l;
  return est;
}

LorentzianValue lorentzian_model(const ResonanceEstimate& est, double x) {
  if (!(est.gamma > 0.0)) throw ConfigError("Lorentzian needs Gamma > 0");
  LorentzianValue v;
  const double d = x - est.x0;
  v.plus = {-d, -est.gamma};
  v.minus = {-d, est.gamma};
  v.density = est.gamma / (std::numbers::pi * (d * d + est.gamma * est.gamma));
  return v;
}

double lorentzian_mass(const ResonanceEstimate& est, double a, double b) {
  if (!(est.gamma > 0.0)) throw ConfigError("Lorentzian needs Gamma > 0");
  return (std::atan((b - est.x0) / est.gamma) - std::atan((a - est.x0) / est.gamma)) / std::numbers::pi;
}

BoundReport fit_bound_constant(const std::vector<double>& x, const std::vector<double>& abs_f2, double x0,
                               double epsilon) {
  if (x.size() != abs_f2.size() || x.empty()) throw ConfigError("bound fit needs matching nonempty samples");
  BoundReport r;
  r.x = x;
  r.abs_f2 = abs_f2;
  const double e3 = epsilon * epsilon * epsilon;
  double cmax = 0.0;
  r.constant = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x0;
    const double q = abs_f2[i] / (d * d + e3);
    r.ratio.push_back(q);
    r.constant = std::min(r.constant, q);
    cmax = std::max(cmax, q);
  }
  r.pass = std::isfinite(r.constant) && r.constant > 1e-8 * cmax;
  return r;
}

BoundReport lower_bound_check(const FeshbachProblem& p, const ResonanceEstimate& est,
                                 const ResonanceSearchWindow& w, int points) {
  if (points < 2) throw ConfigError("bound check needs at least 2 points");
  std::vector<double> xs, f2;
  for (int i = 0; i < points; ++i) {
    const double x = est.x0 - w.half_length + 2.0 * w.half_length * i / (points - 1);
    const BoundaryValue bv = boundary_value(p, x, w.eta_ladder);
    xs.push_back(x);
    f2.push_back(std::norm(bv.F));
  }
  return fit_bound_constant(xs, f2, est.x0, p.epsilon());
}

}  // namespace mtr
