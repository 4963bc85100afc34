#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/krylov.hpp"
#include "mtr/operators.hpp"
#include "mtr/spectral.hpp"

namespace mtr {

struct FeshbachEvaluation {
  cplx z;
  double epsilon = 0.0;
  cplx F;
  double residual = 0.0;  // relative residual of the Q0-block solve
  int iterations = 0;
  CapSpec cap;

  double eta() const { return z.imag(); }
};

/// Assembled ingredients of F(z, eps) for one signed coupling lambda
/// (eps = lambda^2). The Q0 block carries H_lambda + CAP; the P0 rows and
/// columns carry H_lambda only. Immutable, eval() is reentrant.
class FeshbachProblem {
 public:
  FeshbachProblem(const ThresholdModel& model, const VectorField& a, double lambda, const CapSpec& cap,
                  double tol_solve);

  /// F(z) = <psi0, H psi0> - z - <phi, u>, phi = Q0 H psi0,
  /// (Q0 (H + CAP) Q0 - z + sigma P0) u = phi.
  FeshbachEvaluation eval(cplx z) const;

  /// <psi0, (H + Q0 CAP Q0 - z)^-1 psi0> by a full-space solve, for checking
  /// the Schur complement identity 1/F = <psi0, R(z) psi0>.
  cplx resolvent_overlap(cplx z, SolveStats* stats = nullptr) const;

  double lambda() const { return lambda_; }
  double epsilon() const { return lambda_ * lambda_; }
  const CapSpec& cap() const { return cap_; }
  double tolerance() const { return tol_; }
  /// <psi0, H_lambda psi0>; equals eps b + E0 up to rounding.
  double diagonal() const { return diag_; }

 private:
  Vec solve_block(cplx z, std::span<const cplx> rhs, SolveStats& stats) const;

  GridSpec grid_;
  double lambda_;
  CapSpec cap_;
  double tol_;
  std::vector<double> psi0_;
  LatticeOperator h_;
  std::vector<cplx> cap_diag_;
  double sigma_;
  double diag_ = 0.0;
  Vec phi_;
};

struct ResonanceSearchWindow {
  double epsilon = 0.0;
  double lo = 0.0;   // b~ eps / 2
  double hi = 0.0;   // 3 b~ eps / 2
  double r = 2.0;    // exponent r(nu)
  std::array<double, 3> eta_ladder{};
  double eta_cap = 0.0;   // (b~ eps)^r; every ladder rung lies strictly below it
  double half_length = 0.0;  // l(eps) = b~ eps / 4, half-length of I_eps

  /// Slack of the ladder against the cap: eta_cap / eta_ladder[0].
  double slack() const { return eta_cap / eta_ladder[0]; }
};

/// r(nu): 2 for nu = -1, 4 for nu = 1, (nu + 8) / 2 for nu >= 3.
double window_exponent(int nu);

ResonanceSearchWindow make_window(const ResonanceCoefficients& coeffs, double epsilon);

enum class EstimateMethod { predictor, feshbach, time_fit };
std::string_view to_string(EstimateMethod m);

struct ResonanceEstimate {
  double x0 = 0.0;
  double gamma = 0.0;
  EstimateMethod method = EstimateMethod::predictor;
  double x0_uncertainty = 0.0;
  double gamma_uncertainty = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;
  bool valid = true;
  std::string note;
};

/// F(x + i0) from the eta-ladder by second-order Richardson extrapolation.
struct BoundaryValue {
  double x = 0.0;
  cplx F;
  double uncertainty = 0.0;  // |F - first-order extrapolant|
  std::array<cplx, 3> ladder{};
  double max_residual = 0.0;
};

BoundaryValue boundary_value(const FeshbachProblem& p, double x, const std::array<double, 3>& eta_ladder);

/// Richardson combination (8 F(eta/4) - 6 F(eta/2) + F(eta)) / 3.
cplx richardson(const std::array<cplx, 3>& ladder);

struct LocateOptions {
  double x_tol_rel = 1e-3;  // bisection tolerance in units of b~ eps
  int max_bisect = 60;
};

/// Bisection on Re F(x + i0) over (lo, hi) with one secant polish.
ResonanceEstimate locate_resonance(const FeshbachProblem& p, const ResonanceSearchWindow& w,
                                   const LocateOptions& opts = {});

/// x0 = b~ lambda^2, Gamma = b~^-1/2 beta_-1 |lambda|^3.
ResonanceEstimate predict_asymptotic(const ResonanceCoefficients& coeffs, double lambda);

struct LorentzianValue {
  cplx plus;   // -(x - x0) - i Gamma
  cplx minus;  // -(x - x0) + i Gamma
  double density = 0.0;
};

LorentzianValue lorentzian_model(const ResonanceEstimate& est, double x);
/// Integral of the Lorentzian density over [a, b].
double lorentzian_mass(const ResonanceEstimate& est, double a, double b);

struct BoundReport {
  std::vector<double> x;
  std::vector<double> abs_f2;   // |F(x + i0)|^2
  std::vector<double> ratio;    // |F|^2 / (|x - x0|^2 + eps^3)
  double constant = 0.0;        // min ratio
  bool pass = false;
};

/// Largest C with values[i] >= C (|x_i - x0|^2 + eps^3).
BoundReport fit_bound_constant(const std::vector<double>& x, const std::vector<double>& abs_f2, double x0,
                               double epsilon);

/// Samples |F(x + i0)|^2 at 33 points of I_eps = [x0 - l, x0 + l].
BoundReport lower_bound_check(const FeshbachProblem& p, const ResonanceEstimate& est,
                                 const ResonanceSearchWindow& w, int points = 33);

}  // namespace mtr
