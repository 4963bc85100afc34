#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/feshbach.hpp"
#include "mtr/operators.hpp"
#include "mtr/spectral.hpp"

namespace mtr {

enum class PropagatorMethod { krylov_arnoldi, chebyshev };

PropagatorMethod parse_propagator_method(std::string_view tag);
std::string_view to_string(PropagatorMethod m);

struct PropagatorSpec {
  PropagatorMethod method = PropagatorMethod::krylov_arnoldi;
  double dt = 2.0;         // largest step
  double tol = 1e-10;      // per-step error, absolute in the grid norm
  int max_dim = 40;        // Krylov dimension, or Chebyshev degree bound
  bool cap = true;
};

/// Called at each requested time with the current state and the summed
/// per-step error estimates so far.
using SampleCallback = std::function<void(double t, const ComplexField& u, double error_budget)>;

struct PropagationResult {
  ComplexField state;
  double time = 0.0;
  int steps = 0;
  int matvecs = 0;
  double error_budget = 0.0;  // sum of a posteriori per-step estimates
  double max_step_error = 0.0;
};

/// u(t) = exp(-i t H) u0 stepped through sample_times (ascending, within
/// [0, T]); the callback fires at each of them. Krylov steps are accepted when
/// the a posteriori estimate is below spec.tol, halving the step otherwise.
/// Chebyshev requires a Hermitian H.
PropagationResult propagate(const LatticeOperator& h, const ComplexField& u0, const PropagatorSpec& spec, double T,
                            const std::vector<double>& sample_times, const SampleCallback& callback = {});

struct SurvivalTrace {
  double lambda = 0.0;
  std::vector<double> t;
  std::vector<cplx> amplitude;   // <psi0, u(t)>
  std::vector<double> norm;      // ||u(t)||
  std::vector<double> error_budget;
  bool cap = false;
  CapSpec cap_spec;
  // Windowed traces only.
  bool windowed = false;
  double window_lo = 0.0, window_hi = 0.0, mollifier = 0.0;
  double filter_mass = 1.0;  // <psi0, g(H) psi0>
  int filter_steps = 0;
};

/// t = 0 followed by `samples` log-spaced times from T * 1e-4 to T.
std::vector<double> log_spaced_times(double T, int samples);

/// H used for survival runs: H_lambda, plus the CAP when spec.cap is set.
LatticeOperator survival_operator(const ThresholdModel& model, const VectorField& a, double lambda,
                                  const PropagatorSpec& spec, const CapSpec& cap);

SurvivalTrace survival_amplitude(const ThresholdModel& model, const VectorField& a, double lambda,
                                 const PropagatorSpec& spec, double T, int samples, const CapSpec& cap);

struct FilterOptions {
  double mollify_fraction = 0.05;  // transition width relative to |I|
  double tol = 1e-8;               // convergence of the Lanczos approximant
  int max_steps = 6000;            // polynomial degree budget
  int check_every = 25;
};

/// Smooth indicator of [lo, hi]: 1/2 [tanh((x - lo)/d) - tanh((x - hi)/d)],
/// d = mollify_fraction * (hi - lo) / 2.
double window_function(double x, double lo, double hi, double mollify_fraction);

struct FilteredState {
  ComplexField state;  // g(H) psi0
  double mass = 0.0;   // <psi0, g(H) psi0>
  int steps = 0;       // Lanczos polynomial degree used
};

/// g(H) f for Hermitian H by a two-pass Lanczos polynomial approximant.
FilteredState apply_window_filter(const LatticeOperator& h, const ComplexField& f, double lo, double hi,
                                  const FilterOptions& opts = {});

/// <psi0, exp(-i t (H + CAP)) g(H) psi0> with g the smoothed indicator of
/// I = [x0 - half_length, x0 + half_length].
SurvivalTrace windowed_survival(const ThresholdModel& model, const VectorField& a, double lambda,
                                const ResonanceEstimate& est, double half_length, const PropagatorSpec& spec,
                                double T, int samples, const CapSpec& cap, const FilterOptions& fopts = {});

struct FitWindow {
  double t_lo = 0.0, t_hi = 0.0;
  int points = 0;
  double rms = 0.0;  // RMS residual of log|A|
};

struct ExponentialFit {
  ResonanceEstimate estimate;
  FitWindow window;
  std::vector<FitWindow> candidates;
  bool short_window = false;  // trace covers fewer than 2 decay constants
};

struct FitOptions {
  double monotone_tol = 0.05;  // allowed relative rise of |A| between samples
  int min_points = 5;
};

/// Least-squares fit of log|A| = c - Gamma t and arg A = phi - x0 t over an
/// automatically chosen window inside [0.1/Gamma, 3/Gamma].
ExponentialFit fit_exponential(const SurvivalTrace& trace, const FitOptions& opts = {});

/// Columns t, re, im, abs2, norm, error_budget.
void write_trace_csv(const SurvivalTrace& trace, const std::filesystem::path& path);

}  // namespace mtr
