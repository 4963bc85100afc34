#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mtr/config.hpp"
#include "mtr/dynamics.hpp"
#include "mtr/feshbach.hpp"
#include "mtr/model.hpp"
#include "mtr/spectral.hpp"

namespace mtr {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
  int jobs = 1;
  std::optional<std::vector<double>> only;  // restrict to these lambdas
  bool skip_timefit = false;
  std::ostream* log = nullptr;
};

struct LambdaRow {
  double lambda = 0.0;
  double epsilon = 0.0;

  std::optional<ResonanceEstimate> predictor;
  std::optional<ResonanceEstimate> feshbach;
  std::optional<ResonanceEstimate> time_fit;
  std::string predictor_error, feshbach_error, time_fit_error;

  std::optional<ResonanceSearchWindow> window;
  FitWindow fit_window;
  std::optional<SurvivalTrace> trace;
  double sup_deviation = 0.0;  // max_t |A(t) - exp(-i t (x0 - i Gamma))| against the Feshbach estimate

  double cap_reflection = 0.0;  // 1D layer reflection at k = sqrt(b~ eps)
  double gap_ratio = 0.0;  // gap / (b~ eps)
  bool gap_warning = false;
};

/// Least-squares slope of log y against log |x|.
struct PowerFit {
  bool ok = false;
  std::string reason;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double x_min = 0.0, x_max = 0.0;
  int points = 0;
};

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct SweepResult {
  ExperimentConfig config;
  std::string config_hash;
  std::string model_hash;

  PotentialSpec potential;  // tuned
  double e0 = 0.0, gap = 0.0, residual = 0.0, tol_eig = 0.0, scale = 0.0;
  std::vector<double> nearby;
  Parity parity{};

  ResonanceCoefficients coeffs;
  AssumptionReport assumptions;
  CapSpec cap;
  bool cap_tuned = false;
  bool zero_field = false;

  std::vector<LambdaRow> rows;  // ascending lambda
  PowerFit gamma_fit, x0_fit, predictor_gamma_fit;
  std::vector<std::string> warnings;
};

/// Loads config.model_dir when it holds a saved model, otherwise tunes.
ThresholdModel obtain_model(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Throws AssumptionError naming the failed inequality when b - 2<psi0,Y G0 Y psi0> <= 0 or b~ <= 0.
void check_gate(const ResonanceCoefficients& c);

/// The configured CAP. With cap.tune on, the strength minimizes the 1D
/// reflection over k = sqrt(b~) |lambda| for the configured lambdas.
CapSpec resolve_cap(const ExperimentConfig& config, const GridSpec& grid, const ResonanceCoefficients& coeffs);

/// Per-lambda Feshbach location with the configured CAP.
ResonanceEstimate feshbach_estimate(const ThresholdModel& model, const VectorField& a,
                                    const ResonanceCoefficients& coeffs, double lambda, const CapSpec& cap,
                                    double tol_solve, ResonanceSearchWindow* window_out = nullptr);

SweepResult run_sweep(const ExperimentConfig& config, const RunOptions& opts = {});

/// sweep.csv, manifest.json, summary.txt and plotdata/*.csv.
void emit_report(const SweepResult& result, const std::filesystem::path& dir);

std::string summary_text(const SweepResult& result);

}  // namespace mtr
