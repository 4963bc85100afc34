#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixture.hpp"
#include "mtr/krylov.hpp"
#include "mtr/operators.hpp"

using namespace mtr;

namespace {

LinearMap identity_map() {
  return [](std::span<const cplx> x, std::span<cplx> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

LinearMap op_map(const LatticeOperator& op, cplx shift = 0.0) {
  return [&op, shift](std::span<const cplx> x, std::span<cplx> y) {
    op.apply(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] -= shift * x[i];
  };
}

double true_residual(const LinearMap& a, std::span<const cplx> b, std::span<const cplx> x) {
  Vec ax(b.size());
  a(x, ax);
  for (std::size_t i = 0; i < b.size(); ++i) ax[i] = b[i] - ax[i];
  return norm2(ax) / norm2(b);
}

}  // namespace

TEST_SUITE("krylov") {
  TEST_CASE("kernels") {
    const Vec a{{1, 2}, {3, -1}}, b{{0, 1}, {2, 2}};
    CHECK(dot(a, b) == std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1]);
    CHECK(norm2(a) == doctest::Approx(std::sqrt(15.0)));
    Vec y = b;
    axpy(cplx(0, 1), a, y);
    CHECK(y[0] == b[0] + cplx(0, 1) * a[0]);
    scale(2.0, y);
    CHECK(y[1] == 2.0 * (b[1] + cplx(0, 1) * a[1]));
  }

  TEST_CASE("sine transform inverts the shifted Laplacian") {
    const GridSpec g = build_grid(4.0, 13);
    const auto lap = assemble_h0(RealField(g));
    for (cplx shift : {cplx(0.0, 0.0), cplx(-0.3, 0.0), cplx(0.2, 0.5), cplx(1.0, -0.1)}) {
      DirichletLaplacianInverse inv(g, shift);
      const auto f = testing::random_complex(g, 3);
      Vec u(g.size()), back(g.size());
      inv.apply(f.values(), u);
      op_map(lap, shift)(u, back);
      double err = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
      CHECK(err <= 1e-11 * std::sqrt(static_cast<double>(g.size())));
    }
    const double h = g.spacing;
    const double s = std::sin(std::numbers::pi * h / (4 * g.extent));
    CHECK(DirichletLaplacianInverse::laplacian_eigenvalue(g, 1, 1, 1) == doctest::Approx(12.0 / (h * h) * s * s));
  }

  TEST_CASE("gmres on a non-Hermitian shifted Hamiltonian") {
    const auto& m = testing::small_model();
    const auto h = assemble_h_lambda(m.v, testing::small_field(), 0.3)
                       .plus(assemble_cap(default_cap(m.grid(), 2.0), m.grid()));
    const cplx z(0.05, 0.02);
    const auto b = testing::random_complex(m.grid(), 8);
    DirichletLaplacianInverse pre(m.grid(), cplx(0.05, 0.5));
    Vec x(m.grid().size());
    const auto st = gmres(op_map(h, z), pre.as_map(), b.values(), x, SolverOptions{1e-11, 3000, 60});
    CHECK(st.converged);
    CHECK(st.residual <= 1e-11);
    CHECK(true_residual(op_map(h, z), b.values(), x) <= 2e-11);

    Vec x2(m.grid().size());
    const auto st2 = gmres(op_map(h, z), identity_map(), b.values(), x2, SolverOptions{1e-11, 20, 10});
    CHECK_FALSE(st2.converged);
    CHECK(st2.iterations <= 20);
  }

  TEST_CASE("minres on an indefinite Hermitian operator") {
    const auto& m = testing::small_model();
    const auto h = assemble_h0(m.v);
    const double shift = 0.3;  // inside the spectrum
    const auto b = testing::random_complex(m.grid(), 9);
    DirichletLaplacianInverse pre(m.grid(), -1.0);
    Vec x(m.grid().size());
    const auto st = minres(op_map(h, shift), pre.as_map(), b.values(), x, SolverOptions{1e-10, 4000, 60});
    CHECK(st.converged);
    CHECK(true_residual(op_map(h, shift), b.values(), x) <= 2e-10);
  }

  TEST_CASE("zero right-hand side") {
    const GridSpec g = build_grid(2.0, 8);
    const auto h = assemble_h0(RealField(g));
    Vec b(g.size()), x(g.size());
    const auto st = gmres(op_map(h), identity_map(), b, x, {});
    CHECK(st.converged);
    for (auto v : x) CHECK(v == cplx(0.0, 0.0));
  }
}
