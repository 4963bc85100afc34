#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mtr/dynamics.hpp"
#include "mtr/model.hpp"
#include "mtr/operators.hpp"
#include "mtr/spectral.hpp"

namespace mtr {

/// Flat key = value experiment description. Units are part of the key name
/// (_length, _energy, _time); '#' starts a comment. See README for every key.
struct ExperimentConfig {
  double extent_length = 12.0;
  int points = 48;

  PotentialSpec potential{PotentialFamily::anisotropic_gaussian, 1.5, 2.1, 0.0, {}};
  Parity parity{-1, 1, 1};
  double coupling_lo = 2.0;
  double coupling_hi = 7.0;

  VectorPotentialSpec vector_potential{VectorPotentialFamily::gaussian_azimuthal, 1.0, 2.0, {}};

  std::vector<double> lambdas{0.40, 0.32, 0.25, 0.20, 0.16, 0.125, 0.10};

  double tol_eig_relative = 1e-9;  // of the spectral scale
  double tol_solve = 1e-10;
  double tol_prop = 1e-9;
  double tol_c_relative = 1e-6;    // of b^2

  double cap_onset_fraction = 0.6;  // R0 / L
  double cap_width_fraction = 0.3;  // w / L
  double cap_strength_energy = 2.0;
  int cap_tune = 1;  // 1: strength from the reflection scan over the sweep band

  PropagatorMethod propagator = PropagatorMethod::krylov_arnoldi;
  double dt_time = 4.0;
  int krylov_dim = 40;
  int samples = 240;
  double t_max_time = 4000.0;
  int timefit_count = 2;  // time fits for this many of the largest |lambda|

  std::filesystem::path model_dir;  // reuse a saved model when set
  std::filesystem::path output_dir = "out";
  unsigned seed = 12345;

  GridSpec grid() const;
  CapSpec cap() const;
  PropagatorSpec propagator_spec() const;
  TuningOptions tuning() const;

  /// Canonical "key = value" text, one key per line in fixed order.
  std::string canonical() const;
  /// SHA-256 of canonical(), hex.
  std::string hash() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const void* data, std::size_t size);
/// SHA-256 over the tuned coupling, grid and psi0 samples.
std::string model_hash(const ThresholdModel& m);

}  // namespace mtr
