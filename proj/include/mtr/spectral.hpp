#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mtr/krylov.hpp"
#include "mtr/lattice.hpp"
#include "mtr/model.hpp"
#include "mtr/operators.hpp"

namespace mtr {

struct EigenPair {
  double value = 0.0;
  ComplexField vector;  // normalized in the grid inner product
  double residual = 0.0;  // ||H v - value v|| / ||v||
};

struct EigenOptions {
  double tol_res = 0.0;  // absolute; 0 selects 1e-9 * spectral scale
  int max_steps = 400;
  SolverOptions inner{1e-12, 4000, 60};
  /// Optional projector applied to every Krylov vector (symmetry sectors).
  std::function<void(std::span<cplx>)> project;
  std::optional<ComplexField> start;
  unsigned seed = 12345;
};

/// k eigenpairs of a Hermitian operator nearest target, by shift-invert
/// Lanczos with full reorthogonalization. Sorted by distance to target.
std::vector<EigenPair> lowest_eigs(const LatticeOperator& h, int k, double target, const EigenOptions& opts = {});

/// Gershgorin bound on the spectral radius; the reference energy scale.
double spectral_scale(const LatticeOperator& h);

/// Reflection signature: sign[j] = +1 (even) or -1 (odd) under x_j -> -x_j.
using Parity = std::array<int, 3>;

/// Projects f onto the sector with the given reflection signature.
void project_parity(const GridSpec& grid, const Parity& parity, std::span<cplx> f);
/// <f, R_j f> / <f, f> for each axis reflection R_j.
std::array<double, 3> measure_parity(const RealField& f);

struct TuningOptions {
  double gamma_lo = 6.0;
  double gamma_hi = 10.0;
  double tol_eig = 0.0;  // absolute; 0 selects tol_eig_relative * spectral scale
  double tol_eig_relative = 1e-9;
  int max_iter = 60;
  int gap_eigs = 4;      // eigenpairs computed in the full space for the gap
};

struct ThresholdModel {
  PotentialSpec potential;  // coupling holds the tuned value
  RealField v;
  RealField psi0;           // real, normalized, positive lobe towards +x1
  double e0 = 0.0;
  double residual = 0.0;    // ||H0 psi0 - E0 psi0||
  double tol_res = 0.0;     // residual target of the eigensolver; |E0 error| ~ tol_res^2 / gap
  double gap = 0.0;         // distance from E0 to the nearest other eigenvalue
  std::vector<double> nearby;  // other eigenvalues found for the gap
  Parity parity{-1, 1, 1};
  double tol_eig = 0.0;
  double scale = 0.0;       // spectral scale of H0
  int iterations = 0;

  const GridSpec& grid() const { return v.grid(); }
};

/// Secant/bisection search for the coupling at which the lowest eigenvalue in
/// the selected parity sector crosses zero.
ThresholdModel tune_coupling(const PotentialSpec& spec, const GridSpec& grid, const Parity& parity,
                             const TuningOptions& opts);

/// Writes model.txt (key = value) and psi0.bin into dir.
void save_model(const ThresholdModel& m, const std::filesystem::path& dir);
ThresholdModel load_model(const std::filesystem::path& dir);

/// Deflation shift for Q0-restricted solves: 10 * spectral scale.
double deflation_shift(const LatticeOperator& h0);

/// G0 = Q0 (Q0 H0 Q0)^-1 Q0 applied by MINRES on v -> Q0 H0 Q0 v + sigma P0 v.
class ReducedResolvent {
 public:
  ReducedResolvent(const ThresholdModel& model, double tol_solve);

  ComplexField apply(const ComplexField& f, SolveStats* stats = nullptr) const;
  double shift() const { return sigma_; }
  double tolerance() const { return tol_; }
  const LatticeOperator& h0() const { return h0_; }

 private:
  RealField psi0_;
  LatticeOperator h0_;
  double sigma_;
  double tol_;
  std::shared_ptr<DirichletLaplacianInverse> precond_;
};

struct ResonanceCoefficients {
  double b = 0.0;
  std::array<double, 3> x{};  // X_j = int psi0 V x_j
  double c0 = 0.0;
  double yg0y = 0.0;
  double btil = 0.0;
  double alpha_m1 = 0.0;
  double beta_m1 = 0.0;
  int nu = -1;               // -1, or +1 meaning "exceptional, nu >= 1"
  double tol_c = 0.0;
  bool b_minus_2yg0y_positive = false;
  bool btil_positive = false;
  double max_solve_residual = 0.0;
};

/// Default classification tolerance 1e-6 * b^2.
double default_tol_c(double b);

ResonanceCoefficients compute_coefficients(const ThresholdModel& model, const VectorField& a, double tol_solve,
                                           std::optional<double> tol_c = std::nullopt);

/// -1 when c0 > tol_c strictly, else +1 (exceptional branch, nu >= 1).
int classify_nu(const ResonanceCoefficients& coeffs, double tol_c);

}  // namespace mtr
