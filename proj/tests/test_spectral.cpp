#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fixture.hpp"
#include "mtr/operators.hpp"
#include "mtr/spectral.hpp"

using namespace mtr;

namespace {

double fd_mode(const GridSpec& g, int p) {
  const double s = std::sin(p * std::numbers::pi * g.spacing / (4 * g.extent));
  return 4.0 / (g.spacing * g.spacing) * s * s;
}

RealField reflect_x1(const RealField& f) {
  const int n = f.grid().points;
  RealField out(f.grid());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out.at(i, j, k) = f.at(n - 1 - i, j, k);
  return out;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("free ground state matches the closed form") {
    const GridSpec g = build_grid(3.0, 10);
    const auto h = assemble_h0(RealField(g));
    const double ground = 3.0 * fd_mode(g, 1);
    const auto pairs = lowest_eigs(h, 1, 0.0);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].value == doctest::Approx(ground).epsilon(1e-10));
    CHECK(inner_product(pairs[0].vector, pairs[0].vector).real() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("two pairs in a deep well are orthogonal") {
    const GridSpec g = build_grid(5.0, 14);
    PotentialSpec spec{PotentialFamily::anisotropic_gaussian, 1.0, 1.4, 8.0, {}};
    const auto h = assemble_h0(eval_potential(spec, g));
    const auto pairs = lowest_eigs(h, 2, -8.0);
    REQUIRE(pairs.size() == 2);
    CHECK(std::abs(inner_product(pairs[0].vector, pairs[1].vector)) <= 1e-10);
    for (const auto& p : pairs) CHECK(p.residual <= 1e-9 * spectral_scale(h) * 10);
    CHECK(pairs[0].value < pairs[1].value);
  }

  TEST_CASE("target above the spectrum fails to converge") {
    const GridSpec g = build_grid(3.0, 10);
    const auto h = assemble_h0(RealField(g));
    EigenOptions eo;
    eo.max_steps = 30;
    eo.tol_res = 1e-14;
    CHECK_THROWS_AS(lowest_eigs(h, 1, 10.0 * spectral_scale(h), eo), NumericalError);
    CHECK_THROWS_AS(lowest_eigs(h.plus(assemble_cap(default_cap(g, 1.0), g)), 1, 0.0), ConfigError);
  }

  TEST_CASE("parity projection") {
    const GridSpec g = build_grid(2.0, 9);
    auto f = testing::random_complex(g, 4);
    project_parity(g, Parity{-1, 1, 1}, f.values());
    RealField re(g);
    for (std::size_t s = 0; s < g.size(); ++s) re[s] = f[s].real();
    const auto par = measure_parity(re);
    CHECK(par[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(par[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(par[2] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("tuned threshold model") {
    const auto& m = testing::small_model();
    CHECK(std::abs(m.e0) <= m.tol_eig);
    CHECK(m.tol_eig == doctest::Approx(1e-9 * m.scale).epsilon(0.5));
    CHECK(m.residual <= m.tol_res);
    CHECK(m.gap > 0.0);
    CHECK(inner_product(m.psi0, m.psi0).real() == doctest::Approx(1.0).epsilon(1e-12));
    const auto par = measure_parity(m.psi0);
    CHECK(par[0] < -0.99);
    CHECK(par[1] > 0.99);
    // positive lobe towards +x1
    double m1 = 0.0;
    for (int i = 0; i < m.grid().points; ++i)
      for (int j = 0; j < m.grid().points; ++j)
        for (int k = 0; k < m.grid().points; ++k) m1 += m.grid().coord(i) * m.psi0.at(i, j, k);
    CHECK(m1 > 0.0);
  }

  TEST_CASE("narrow well on the default box") {
    PotentialSpec spec{PotentialFamily::anisotropic_gaussian, 1.0, 1.4, 0.0, {}};
    TuningOptions opts;
    opts.gamma_lo = 2.0;
    opts.gamma_hi = 20.0;
    const Parity odd{-1, 1, 1};
    const auto m = tune_coupling(spec, build_grid(12.0, 32), odd, opts);
    CHECK(std::abs(m.e0) <= 1e-9 * m.scale);
    CHECK(m.gap > 0.0);

    // odd-sector ground energy at a fixed coupling, found without the tuner
    auto odd_ground = [&](int n, double gamma) {
      PotentialSpec s = spec;
      s.coupling = gamma;
      const GridSpec g = build_grid(12.0, n);
      EigenOptions eo;
      eo.project = [g, odd](std::span<cplx> f) { project_parity(g, odd, f); };
      return lowest_eigs(assemble_h0(eval_potential(s, g)), 1, 0.0, eo).front().value;
    };
    const double gamma = m.potential.coupling;
    CHECK(odd_ground(32, gamma * (1.0 - 1e-5)) > 0.0);
    CHECK(odd_ground(32, gamma * (1.0 + 1e-5)) < 0.0);

    // at fixed coupling the energy converges at second order in h
    const double e24 = odd_ground(24, gamma), e48 = odd_ground(48, gamma);
    const double h24 = 24.0 / 25, h32 = 24.0 / 33, h48 = 24.0 / 49;
    const double c = (e24 - m.e0) / (h24 * h24 - h32 * h32);
    CHECK(e48 - m.e0 == doctest::Approx(c * (h48 * h48 - h32 * h32)).epsilon(0.25));
  }

  TEST_CASE("bracket without a crossing") {
    PotentialSpec spec{PotentialFamily::anisotropic_gaussian, 1.5, 2.1, 0.0, {}};
    TuningOptions opts;
    opts.gamma_lo = 0.5;
    opts.gamma_hi = 1.0;
    CHECK_THROWS_AS(tune_coupling(spec, build_grid(8.0, 12), Parity{-1, 1, 1}, opts), NumericalError);
    opts.gamma_hi = 0.5;
    CHECK_THROWS_AS(tune_coupling(spec, build_grid(8.0, 12), Parity{-1, 1, 1}, opts), ConfigError);
  }

  TEST_CASE("model persistence") {
    const auto& m = testing::small_model();
    const auto dir = std::filesystem::temp_directory_path() / "mtr_spectral_model";
    std::filesystem::remove_all(dir);
    save_model(m, dir);
    const auto back = load_model(dir);
    CHECK(back.potential.coupling == m.potential.coupling);
    CHECK(back.e0 == m.e0);
    CHECK(back.gap == m.gap);
    CHECK(back.tol_res == m.tol_res);
    CHECK(back.psi0.data() == m.psi0.data());
    CHECK(back.v.data() == m.v.data());
    CHECK(back.nearby == m.nearby);
    CHECK_THROWS_AS(load_model(dir / "missing"), ConfigError);
  }

  TEST_CASE("reduced resolvent") {
    const auto& m = testing::small_model();
    const double tol = 1e-10;
    ReducedResolvent g0(m, tol);
    const auto zero = g0.apply(to_complex(m.psi0));
    for (const auto& v : zero.values()) CHECK(std::abs(v) <= 1e-12);

    const auto f = testing::random_complex(m.grid(), 17);
    SolveStats st;
    const auto u = g0.apply(f, &st);
    CHECK(st.converged);
    CHECK(std::abs(inner_product(m.psi0, u)) <= tol);
    // ||H0 u - Q0 f|| <= tol ||f||, measured with an independent projection
    const auto psi = to_complex(m.psi0);
    const cplx c = inner_product(psi, f);
    auto hu = g0.h0().apply(u);
    double r = 0.0;
    for (std::size_t s = 0; s < f.size(); ++s) r += std::norm(hu[s] - (f[s] - psi[s] * c));
    const double fn = std::sqrt(inner_product(f, f).real());
    // H0 u leaks <H0 psi0, u> psi0 back into the P0 direction, bounded by the tuning residual.
    const double un = std::sqrt(inner_product(u, u).real());
    CHECK(std::sqrt(r * m.grid().cell_volume()) <= 10 * tol * fn + 2 * m.residual * un);

    // self-adjointness on real probes
    const auto a = to_complex(testing::random_real(m.grid(), 30));
    const auto b = to_complex(testing::random_real(m.grid(), 31));
    const cplx ab = inner_product(a, g0.apply(b)), ba = inner_product(b, g0.apply(a));
    CHECK(std::abs(ab - std::conj(ba)) <= 1e-9 * std::abs(ab));
  }

  TEST_CASE("coefficients of the tuned model") {
    const auto& m = testing::small_model();
    const auto& c = testing::small_coefficients();
    CHECK(c.nu == -1);
    CHECK(std::abs(c.x[1]) <= 1e-12 * std::abs(c.x[0]));
    CHECK(std::abs(c.x[2]) <= 1e-12 * std::abs(c.x[0]));
    CHECK(c.c0 == (c.x[0] * c.x[0] + c.x[1] * c.x[1] + c.x[2] * c.x[2]) / (12.0 * std::numbers::pi));
    CHECK(c.beta_m1 == c.b * c.c0 * (c.b - 2.0 * c.yg0y));
    CHECK(c.btil == c.b - c.yg0y);
    CHECK(c.b >= 0.0);
    CHECK(c.tol_c == default_tol_c(c.b));
    CHECK(c.btil_positive);
    CHECK(c.b_minus_2yg0y_positive);
    CHECK(std::isfinite(c.alpha_m1));

    // X1 by independent quadrature
    double x1 = 0.0;
    const GridSpec& g = m.grid();
    for (int i = 0; i < g.points; ++i)
      for (int j = 0; j < g.points; ++j)
        for (int k = 0; k < g.points; ++k) x1 += m.psi0.at(i, j, k) * m.v.at(i, j, k) * g.coord(i);
    CHECK(c.x[0] == doctest::Approx(x1 * g.cell_volume()).epsilon(1e-12));
  }

  TEST_CASE("coefficients are even in the field sign") {
    const auto& m = testing::small_model();
    VectorField neg = testing::small_field();
    for (int j = 0; j < 3; ++j)
      for (auto& v : neg[j].values()) v = -v;
    const auto& c = testing::small_coefficients();
    const auto d = compute_coefficients(m, neg, 1e-12);
    CHECK(d.b == c.b);
    CHECK(d.yg0y == doctest::Approx(c.yg0y).epsilon(1e-9));
    CHECK(d.btil == doctest::Approx(c.btil).epsilon(1e-9));
    CHECK(d.alpha_m1 == doctest::Approx(c.alpha_m1).epsilon(1e-8));
    CHECK(d.beta_m1 == doctest::Approx(c.beta_m1).epsilon(1e-9));

    const auto z = compute_coefficients(m, VectorField(m.grid()), 1e-12);
    CHECK(z.b == 0.0);
    CHECK(z.yg0y == 0.0);
    CHECK(z.btil == 0.0);
    CHECK(z.beta_m1 == 0.0);
  }

  TEST_CASE("c0 is invariant under reflection of x1") {
    const auto& m = testing::small_model();
    ThresholdModel r = m;
    r.psi0 = reflect_x1(m.psi0);
    r.v = reflect_x1(m.v);
    const auto a = compute_coefficients(m, VectorField(m.grid()), 1e-10);
    const auto b = compute_coefficients(r, VectorField(m.grid()), 1e-10);
    CHECK(b.x[0] == doctest::Approx(-a.x[0]).epsilon(1e-12));
    CHECK(b.c0 == doctest::Approx(a.c0).epsilon(1e-12));
    CHECK(a.c0 >= 0.0);
  }

  TEST_CASE("even threshold state takes the exceptional branch") {
    const auto& m = testing::small_model();
    ThresholdModel even = m;
    even.psi0 = RealField::sample(m.grid(), [](double x, double y, double z) {
      return std::exp(-(x * x + y * y + z * z) / 2);
    });
    const double nrm = std::sqrt(inner_product(even.psi0, even.psi0).real());
    for (auto& v : even.psi0.values()) v /= nrm;
    const auto c = compute_coefficients(even, testing::small_field(), 1e-10);
    for (double x : c.x) CHECK(std::abs(x) <= 1e-12);
    CHECK(c.nu == 1);

    ResonanceCoefficients probe;
    probe.c0 = 1e-6;
    CHECK(classify_nu(probe, 1e-6) == 1);
    CHECK(classify_nu(probe, std::nextafter(1e-6, 0.0)) == -1);

    ThresholdModel degenerate = m;
    degenerate.gap = 0.0;
    CHECK_THROWS_AS(compute_coefficients(degenerate, testing::small_field(), 1e-10), AssumptionError);
  }
}
