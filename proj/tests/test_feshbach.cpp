#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixture.hpp"
#include "mtr/feshbach.hpp"

using namespace mtr;

namespace {

CapSpec no_cap(const GridSpec& g) { return default_cap(g, 0.0); }

}  // namespace

TEST_SUITE("feshbach") {
  TEST_CASE("zero coupling") {
    const auto& m = testing::small_model();
    FeshbachProblem p(m, testing::small_field(), 0.0, no_cap(m.grid()), 1e-12);
    CHECK(p.epsilon() == 0.0);
    for (cplx z : {cplx(0.01, 0.1), cplx(-0.2, 0.05), cplx(0.3, -0.2)}) {
      const auto e = p.eval(z);
      // the residual of the tuned state enters at second order
      CHECK(std::abs(e.F + z) <= std::abs(m.e0) + 10 * m.residual * m.residual / std::abs(z.imag()) + 1e-14);
    }
    FeshbachProblem q(m, VectorField(m.grid()), 0.3, no_cap(m.grid()), 1e-12);
    CHECK(std::abs(q.eval(cplx(0.02, 0.1)).F + cplx(0.02, 0.1)) <= std::abs(m.e0) + 1e-12);
  }

  TEST_CASE("Schur complement identity") {
    const auto& m = testing::small_model();
    FeshbachProblem p(m, testing::small_field(), 0.3, no_cap(m.grid()), 1e-12);
    CHECK(p.diagonal() == doctest::Approx(p.epsilon() * testing::small_coefficients().b + m.e0).epsilon(1e-10));
    for (cplx z : {cplx(0.02, 0.1), cplx(-0.1, 0.1), cplx(0.15, 0.1), cplx(0.05, -0.1), cplx(0.3, 0.2)}) {
      const cplx f = p.eval(z).F;
      const cplx r = p.resolvent_overlap(z);
      CHECK(std::abs(1.0 / f - r) <= 1e-8 * std::abs(r));
    }

    // with the absorbing layer the identity holds for the Q0-dressed full operator
    FeshbachProblem c(m, testing::small_field(), 0.3, default_cap(m.grid(), 2.0), 1e-12);
    const cplx z(0.02, 1e-3);
    CHECK(std::abs(1.0 / c.eval(z).F - c.resolvent_overlap(z)) <= 1e-4 * std::abs(c.resolvent_overlap(z)));
  }

  TEST_CASE("Herglotz sign without absorption") {
    const auto& m = testing::small_model();
    FeshbachProblem p(m, testing::small_field(), 0.25, no_cap(m.grid()), 1e-11);
    for (double x : {-0.1, 0.0, 0.03, 0.08, 0.2}) {
      CHECK(p.eval(cplx(x, 0.05)).F.imag() < 0.0);
      CHECK(p.eval(cplx(x, -0.05)).F.imag() > 0.0);
    }
  }

  TEST_CASE("F does not depend on the sign of lambda") {
    const auto& m = testing::small_model();
    const auto cap = default_cap(m.grid(), 2.0);
    FeshbachProblem plus(m, testing::small_field(), 0.3, cap, 1e-12);
    FeshbachProblem minus(m, testing::small_field(), -0.3, cap, 1e-12);
    for (cplx z : {cplx(0.04, 0.01), cplx(0.1, 0.002)}) {
      const cplx a = plus.eval(z).F, b = minus.eval(z).F;
      CHECK(std::abs(a - b) <= 1e-8 * std::abs(a));
    }
  }

  TEST_CASE("search window") {
    const auto& c = testing::small_coefficients();
    const auto w = make_window(c, 0.04);
    const double be = c.btil * 0.04;
    CHECK(w.lo == 0.5 * be);
    CHECK(w.hi == 1.5 * be);
    CHECK(w.half_length == 0.25 * be);
    CHECK(w.r == 2.0);
    for (double eta : w.eta_ladder) CHECK(eta < std::pow(be, 2.0));
    CHECK(w.slack() == doctest::Approx(2.0));
    CHECK(window_exponent(1) == 4.0);
    CHECK(window_exponent(3) == 5.5);
    ResonanceCoefficients bad = c;
    bad.btil = 0.0;
    CHECK_THROWS_AS(make_window(bad, 0.04), AssumptionError);
    CHECK(richardson({cplx(3.0), cplx(3.0), cplx(3.0)}) == cplx(3.0));
    // exact for F linear + quadratic in eta
    auto q = [](double eta) { return cplx(1.0 + 2.0 * eta + 5.0 * eta * eta, -0.5 * eta); };
    CHECK(std::abs(richardson({q(0.1), q(0.05), q(0.025)}) - q(0.0)) <= 1e-14);
  }

  TEST_CASE("resonance location on the small model") {
    const auto& m = testing::small_model();
    const auto& c = testing::small_coefficients();
    const double lambda = 0.2;
    FeshbachProblem p(m, testing::small_field(), lambda, default_cap(m.grid(), 2.0), 1e-10);
    const auto w = make_window(c, lambda * lambda);
    const auto est = locate_resonance(p, w);
    CHECK(est.method == EstimateMethod::feshbach);
    CHECK(est.valid);
    CHECK(est.x0 > w.lo);
    CHECK(est.x0 < w.hi);
    CHECK(est.gamma > 0.0);
    CHECK(est.x0_uncertainty <= 2e-3 * c.btil * p.epsilon());
    MESSAGE("x0 = " << est.x0 << " (b~ eps = " << c.btil * p.epsilon() << "), Gamma = " << est.gamma);

    const auto bound = lower_bound_check(p, est, w, 9);
    CHECK(bound.x.size() == 9);
    CHECK(bound.constant > 0.0);
    CHECK(bound.pass);

    // wrong window: no sign change
    ResonanceSearchWindow far = w;
    far.lo = 5.0 * w.hi;
    far.hi = 6.0 * w.hi;
    CHECK_THROWS_AS(locate_resonance(p, far), NumericalError);
  }

  TEST_CASE("asymptotic predictor") {
    const auto& c = testing::small_coefficients();
    const auto a = predict_asymptotic(c, 0.2), b = predict_asymptotic(c, -0.2), h = predict_asymptotic(c, 0.1);
    CHECK(a.x0 == b.x0);
    CHECK(a.gamma == b.gamma);
    CHECK(h.x0 == a.x0 / 4);
    CHECK(h.gamma == a.gamma / 8);
    CHECK(a.x0 == doctest::Approx(c.btil * 0.04));
    CHECK(a.gamma == doctest::Approx(c.beta_m1 / std::sqrt(c.btil) * 0.008));
    const auto z = predict_asymptotic(c, 0.0);
    CHECK(z.x0 == 0.0);
    CHECK(z.gamma == 0.0);
    ResonanceCoefficients ex = c;
    ex.nu = 1;
    CHECK_THROWS_AS(predict_asymptotic(ex, 0.2), AssumptionError);
  }

  TEST_CASE("Lorentzian model") {
    ResonanceEstimate est;
    est.x0 = 0.3;
    est.gamma = 0.01;
    const auto c = lorentzian_model(est, 0.3);
    CHECK(c.plus == cplx(0.0, -0.01));
    CHECK(c.minus == cplx(0.0, 0.01));
    CHECK(lorentzian_mass(est, -1e300, 1e300) == doctest::Approx(1.0).epsilon(1e-15));
    // mass outside [x0 - l, x0 + l] is (2/pi) atan(Gamma / l) <= (2/pi) Gamma / l
    for (double l : {0.02, 0.1, 1.0}) {
      const double inside = lorentzian_mass(est, 0.3 - l, 0.3 + l);
      CHECK(1.0 - inside == doctest::Approx(2.0 / std::numbers::pi * std::atan(0.01 / l)).epsilon(1e-10));
      CHECK(1.0 - inside <= 2.0 / std::numbers::pi * 0.01 / l);
    }
    // density integrates to the mass (Simpson)
    const int n = 2000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = 0.25 + 0.1 * i / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * lorentzian_model(est, x).density;
    }
    acc *= 0.1 / n / 3.0;
    CHECK(acc == doctest::Approx(lorentzian_mass(est, 0.25, 0.35)).epsilon(1e-8));
    est.gamma = 0.0;
    CHECK_THROWS_AS(lorentzian_model(est, 0.3), ConfigError);
  }

  TEST_CASE("bound constant on a synthetic Lorentzian") {
    for (auto [gamma, eps] : {std::pair{0.001, 0.2}, std::pair{0.2, 0.2}}) {
      ResonanceEstimate est;
      est.x0 = 0.3;
      est.gamma = gamma;
      const double e3 = eps * eps * eps;
      const double expected = std::min(1.0, gamma * gamma / e3);
      std::vector<double> xs, f2;
      const double l = 100.0 * std::max(gamma, std::sqrt(e3));
      for (int i = 0; i <= 400; ++i) {
        const double x = est.x0 - l + 2.0 * l * i / 400;
        xs.push_back(x);
        f2.push_back(std::norm(lorentzian_model(est, x).plus));
      }
      const auto r = fit_bound_constant(xs, f2, est.x0, eps);
      CHECK(r.constant == doctest::Approx(expected).epsilon(1e-3));
      CHECK(r.pass);
    }
    CHECK_THROWS_AS(fit_bound_constant({1.0}, {}, 0.0, 0.1), ConfigError);
  }
}
