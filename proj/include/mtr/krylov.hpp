#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mtr/lattice.hpp"

namespace mtr {

using Vec = std::vector<cplx>;
/// y = Op x. Must not alias.
using LinearMap = std::function<void(std::span<const cplx>, std::span<cplx>)>;

// Plain Euclidean kernels; grid quadrature weights are applied by callers.
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
void scale(cplx alpha, std::span<cplx> x);

struct SolverOptions {
  double tol = 1e-10;    // relative residual ||b - A x|| / ||b||
  int max_iter = 3000;   // total inner iterations
  int restart = 60;      // GMRES cycle length
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final true relative residual
  bool converged = false;
};

/// Restarted GMRES with right preconditioning. x holds the initial guess on entry.
SolveStats gmres(const LinearMap& a, const LinearMap& precond, std::span<const cplx> b, std::span<cplx> x,
                 const SolverOptions& opts);

/// Preconditioned MINRES for Hermitian (possibly indefinite) a with Hermitian
/// positive definite precond. x holds the initial guess on entry.
SolveStats minres(const LinearMap& a, const LinearMap& precond, std::span<const cplx> b, std::span<cplx> x,
                  const SolverOptions& opts);

/// Exact inverse of (-Delta_h - shift) on the Dirichlet grid via the type-I
/// discrete sine transform. Used as a preconditioner for the lattice
/// Hamiltonians. apply() is safe to call concurrently.
class DirichletLaplacianInverse {
 public:
  DirichletLaplacianInverse(const GridSpec& grid, cplx shift);
  ~DirichletLaplacianInverse();
  DirichletLaplacianInverse(const DirichletLaplacianInverse&) = delete;
  DirichletLaplacianInverse& operator=(const DirichletLaplacianInverse&) = delete;

  void apply(std::span<const cplx> x, std::span<cplx> y) const;
  LinearMap as_map() const;

  /// Eigenvalue of -Delta_h for mode (p, q, r), 1-based.
  static double laplacian_eigenvalue(const GridSpec& grid, int p, int q, int r);
  cplx shift() const { return shift_; }

 private:
  struct Plan;
  GridSpec grid_;
  cplx shift_;
  std::vector<cplx> inv_symbol_;
  std::unique_ptr<Plan> plan_;
};

}  // namespace mtr
