#pragma once

#include <array>
#include <filesystem>
#include <string_view>

#include "mtr/lattice.hpp"
#include "mtr/sparse.hpp"

namespace mtr {

enum class OperatorKind { h0, h_lambda, y, z, cap, composite };

std::string_view to_string(OperatorKind kind);

/// Assembled lattice operator. Immutable after assembly; apply() is reentrant.
class LatticeOperator {
 public:
  LatticeOperator() = default;
  LatticeOperator(GridSpec grid, OperatorKind kind, CsrMatrix matrix, bool hermitian);

  const GridSpec& grid() const { return grid_; }
  OperatorKind kind() const { return kind_; }
  bool hermitian() const { return hermitian_; }
  const CsrMatrix& matrix() const { return matrix_; }
  std::size_t size() const { return matrix_.rows(); }

  void apply(std::span<const cplx> x, std::span<cplx> y) const { matrix_.apply(x, y); }
  void apply_adjoint(std::span<const cplx> x, std::span<cplx> y) const { matrix_.apply_adjoint(x, y); }
  ComplexField apply(const ComplexField& f) const;

  /// <f, O f> / <f, f>
  cplx rayleigh_quotient(const ComplexField& f) const;

  /// this + scale * other, tagged composite. Hermitian iff both are and scale is real.
  LatticeOperator plus(const LatticeOperator& other, cplx scale = 1.0) const;

  /// Coordinate text export: one "row col re im" line per stored entry.
  void write_coordinates(const std::filesystem::path& path) const;

 private:
  GridSpec grid_;
  OperatorKind kind_ = OperatorKind::composite;
  CsrMatrix matrix_;
  bool hermitian_ = false;
};

/// -Laplacian (7-point, Dirichlet) + diag(V).
LatticeOperator assemble_h0(const RealField& potential);
/// Rejects potentials with a nonzero imaginary part.
LatticeOperator assemble_h0(const ComplexField& potential);

/// Y = -(A.P + P.A) with P = -i D (central differences), assembled in the
/// symmetric form i (A_j D_j + D_j A_j) so the matrix is exactly Hermitian.
LatticeOperator assemble_y(const VectorField& a);
/// Z = |A|^2 (diagonal).
LatticeOperator assemble_z(const VectorField& a);

/// H_lambda = H0 + lambda Y + lambda^2 Z on the 7-point pattern of H0.
LatticeOperator assemble_h_lambda(const RealField& potential, const VectorField& a, double lambda);

/// Nine-component field in K = L2(R^3; C^9).
using NineField = std::array<ComplexField, 9>;

cplx inner_product(const NineField& f, const NineField& g);

/// W_eps = w_eps^* U w_eps with rows
///   j = 1..3: eps^{1/2} A_j,  j = 4..6: eps^{1/4} a_j,  j = 7..9: eps^{1/4} b_j P_j,
/// a_j = |A_j|^{1/2}, b_j = sign(A_j) a_j, and U the block involution
///   [[1, 0, 0], [0, 0, -1], [0, -1, 0]].
class FactorizedPerturbation {
 public:
  FactorizedPerturbation(const VectorField& a, double epsilon);

  double epsilon() const { return epsilon_; }
  const GridSpec& grid() const { return a_.grid(); }
  const VectorField& magnitude_root() const { return root_; }
  const VectorField& signed_root() const { return signed_root_; }

  NineField apply(const ComplexField& f) const;
  ComplexField apply_adjoint(const NineField& g) const;
  static NineField apply_signature(const NineField& g);

  /// W_eps f = sqrt(eps) Y f + eps Z f, assembled independently of the factors.
  ComplexField apply_direct(const ComplexField& f) const;

 private:
  VectorField a_;
  VectorField root_;         // a_j
  VectorField signed_root_;  // b_j
  double epsilon_;
  LatticeOperator y_;
  LatticeOperator z_;
};

/// Central difference D_j f with Dirichlet zero outside the box.
ComplexField central_difference(const ComplexField& f, int axis);

struct CapSpec {
  double onset = 0.0;     // R0
  double width = 0.0;     // w
  double strength = 0.0;  // eta_c

  /// Ramp s(u) = clamp(u, 0, 1)^3.
  static double ramp(double u);
  double profile(double r) const;
};

/// Onset 0.6 L, width 0.3 L.
CapSpec default_cap(const GridSpec& grid, double strength);

/// Diagonal -i eta_c s((|x| - R0) / w). Requires R0 + w <= L.
LatticeOperator assemble_cap(const CapSpec& spec, const GridSpec& grid);

/// |reflection amplitude|^2 of a discrete plane wave e^{ikx} running radially
/// into the layer on a 1D chain of the given spacing, with a Dirichlet wall at
/// `wall` (normally L). Includes whatever bounces off the wall and survives the
/// return trip.
double cap_reflection_1d(const CapSpec& spec, double spacing, double wall, double k);

/// Strength minimizing the worst 1D reflection over momenta in [k_lo, k_hi]
/// (sampled log-uniformly, capped below k h = 3). Onset and width are kept.
double tune_cap_strength(const CapSpec& spec, double spacing, double wall, double k_lo, double k_hi);

}  // namespace mtr
