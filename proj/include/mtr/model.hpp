#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "mtr/lattice.hpp"

namespace mtr {

enum class PotentialFamily { anisotropic_gaussian, inverse_square_regularized, user_table };
enum class VectorPotentialFamily { gaussian_azimuthal, compact_bump, user_table };

PotentialFamily parse_potential_family(std::string_view tag);
VectorPotentialFamily parse_vector_potential_family(std::string_view tag);
std::string_view to_string(PotentialFamily f);
std::string_view to_string(VectorPotentialFamily f);

/// Well families, all of the form V = -coupling * shape(x):
///   anisotropic-gaussian        shape = exp(-x1^2/a^2 - (x2^2 + x3^2)/b^2)
///   inverse-square-regularized  shape = (1 + x1^2/a^2 + (x2^2 + x3^2)/b^2)^-2
///   user-table                  shape read from a real field dump
struct PotentialSpec {
  PotentialFamily family = PotentialFamily::anisotropic_gaussian;
  double width_a = 1.0;
  double width_b = 1.4;
  double coupling = 0.0;
  std::filesystem::path table;
};

/// gaussian-azimuthal  A = amplitude * exp(-r^2/w^2) (-x2, x1, 0)
/// compact-bump        A = amplitude * bump(r/w) (-x2, x1, 0), bump(u) = exp(1 - 1/(1-u^2)) for u < 1
/// user-table          three real field dumps, one per component
struct VectorPotentialSpec {
  VectorPotentialFamily family = VectorPotentialFamily::gaussian_azimuthal;
  double amplitude = 0.0;
  double width = 2.0;
  std::array<std::filesystem::path, 3> tables;
};

RealField eval_potential(const PotentialSpec& spec, const GridSpec& grid);
VectorField eval_vector_potential(const VectorPotentialSpec& spec, const GridSpec& grid);

struct DecayFit {
  double exponent = 0.0;  // beta in |f| ~ <x>^-beta
  double r_squared = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
};

/// Least-squares slope of log(max |f| over a radial bin) against log<x>,
/// for radii in [r_max - (r_max - r_min) / 3, r_max] intersected with the
/// bins where f is above underflow. r_max defaults to the box extent.
DecayFit fit_decay(const RealField& f, double r_min, double r_max);
/// Decay fit of |A| = sqrt(A1^2 + A2^2 + A3^2).
DecayFit fit_decay(const VectorField& a, double r_min, double r_max);

struct ThresholdModel;

struct AssumptionReport {
  DecayFit potential_decay;         // beta_1
  DecayFit vector_potential_decay;  // beta_2
  double div_b_max = 0.0;           // interior max |div curl A|
  std::array<double, 3> linear_term_residuals{};  // |<psi0, (P_j A_j + A_j P_j) psi0>|
  double simplicity_gap = 0.0;
  DecayFit psi0_decay;
  bool resonance_heuristic_pass = false;

  // Thresholds the flags were judged against.
  double decay_threshold = 2.0;
  double linear_term_threshold = 1e-12;
  double psi0_decay_threshold = 1.5;

  bool decay_ok() const;
  bool linear_term_ok() const;
};

/// Structural checks on a tuned model. The fit window for the decay
/// exponents ends at fit_radius (normally the absorbing-layer onset).
AssumptionReport check_assumptions(const RealField& v, const VectorField& a, const ThresholdModel& threshold,
                                   double fit_radius);

/// |<f, (P_j A_j + A_j P_j) f>| for j = 1, 2, 3 with P_j = -i D_j.
std::array<double, 3> linear_term_residuals(const RealField& f, const VectorField& a);

}  // namespace mtr
