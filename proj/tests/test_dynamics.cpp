#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixture.hpp"
#include "mtr/dynamics.hpp"

using namespace mtr;

namespace {

double norm(const ComplexField& f) { return std::sqrt(inner_product(f, f).real()); }

SurvivalTrace synthetic(double x0, double gamma, double T, int samples, double noise = 0.0, unsigned seed = 1) {
  SurvivalTrace tr;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  for (double t : log_spaced_times(T, samples)) {
    cplx a = std::exp(cplx(-gamma * t, -x0 * t));
    if (noise > 0.0) a *= 1.0 + noise * d(rng);
    tr.t.push_back(t);
    tr.amplitude.push_back(a);
    tr.norm.push_back(std::abs(a));
    tr.error_budget.push_back(0.0);
  }
  return tr;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("method tags") {
    CHECK(parse_propagator_method("krylov-arnoldi") == PropagatorMethod::krylov_arnoldi);
    CHECK(parse_propagator_method("chebyshev") == PropagatorMethod::chebyshev);
    CHECK(to_string(PropagatorMethod::chebyshev) == "chebyshev");
    CHECK_THROWS_AS(parse_propagator_method("euler"), ConfigError);
  }

  TEST_CASE("log spaced sampling") {
    const auto t = log_spaced_times(100.0, 50);
    REQUIRE(t.size() == 51);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == doctest::Approx(0.01));
    CHECK(t.back() == 100.0);
    CHECK(std::is_sorted(t.begin(), t.end()));
    CHECK_THROWS_AS(log_spaced_times(0.0, 5), ConfigError);
  }

  TEST_CASE("unitarity without absorption") {
    const auto& m = testing::small_model();
    const auto h = assemble_h_lambda(m.v, testing::small_field(), 0.3);
    auto u0 = testing::random_complex(m.grid(), 12);
    const double n0 = norm(u0);
    const double e0 = inner_product(u0, h.apply(u0)).real();
    for (auto method : {PropagatorMethod::krylov_arnoldi, PropagatorMethod::chebyshev}) {
      PropagatorSpec spec;
      spec.method = method;
      spec.cap = false;
      spec.dt = 0.5;
      spec.tol = 1e-10;
      spec.max_dim = method == PropagatorMethod::chebyshev ? 400 : 40;
      const double T = 5.0;
      const auto res = propagate(h, u0, spec, T, {1.0, 2.5, 5.0});
      CHECK(res.time == T);
      CHECK(std::abs(norm(res.state) - n0) <= 1e-10 * T * n0);
      const double e = inner_product(res.state, h.apply(res.state)).real();
      CHECK(std::abs(e - e0) <= 1e-8 * std::abs(e0) * T);
      CHECK(res.error_budget <= 1e-10 * res.steps);
    }
  }

  TEST_CASE("Krylov and Chebyshev agree") {
    const auto& m = testing::small_model();
    const auto h = assemble_h_lambda(m.v, testing::small_field(), 0.2);
    const auto u0 = to_complex(m.psi0);
    PropagatorSpec k;
    k.tol = 1e-11;
    PropagatorSpec c = k;
    c.method = PropagatorMethod::chebyshev;
    c.max_dim = 400;
    const auto a = propagate(h, u0, k, 3.0, {}).state;
    const auto b = propagate(h, u0, c, 3.0, {}).state;
    double d = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) d += std::norm(a[s] - b[s]);
    CHECK(std::sqrt(d * m.grid().cell_volume()) <= 1e-9);

    CHECK_THROWS_AS(propagate(h.plus(assemble_cap(default_cap(m.grid(), 1.0), m.grid())), u0, c, 1.0, {}),
                    ConfigError);
  }

  TEST_CASE("stationary threshold state") {
    const auto& m = testing::small_model();
    const auto h0 = assemble_h0(m.v);
    const auto psi = to_complex(m.psi0);
    PropagatorSpec spec;
    spec.dt = 2.0;
    spec.tol = 1e-10;
    for (double T : {5.0, 40.0}) {
      const auto res = propagate(h0, psi, spec, T, {});
      double d = 0.0;
      const cplx phase = std::exp(cplx(0.0, -m.e0 * T));
      for (std::size_t s = 0; s < psi.size(); ++s) d += std::norm(res.state[s] - phase * psi[s]);
      const double steps = std::ceil(T / spec.dt);
      CHECK(std::sqrt(d * m.grid().cell_volume()) <= m.residual * T + spec.tol * steps + res.error_budget);
    }
  }

  TEST_CASE("absorbing layer removes norm monotonically") {
    const auto& m = testing::small_model();
    const GridSpec& g = m.grid();
    const auto h = assemble_h0(RealField(g)).plus(assemble_cap(default_cap(g, 2.0), g));
    // outgoing packet aimed at the layer
    const auto u0 = ComplexField::sample(g, [](double x, double y, double z) {
      return std::exp(-((x - 2.0) * (x - 2.0) + y * y + z * z)) * std::exp(cplx(0.0, 2.0 * x));
    });
    std::vector<double> norms;
    PropagatorSpec spec;
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) times.push_back(0.5 * k);
    propagate(h, u0, spec, 10.0, times, [&](double, const ComplexField& u, double) { norms.push_back(norm(u)); });
    REQUIRE(norms.size() == 20);
    CHECK(norms.front() <= norm(u0) + 1e-12);
    for (std::size_t k = 1; k < norms.size(); ++k) CHECK(norms[k] <= norms[k - 1] + 1e-12);
    CHECK(norms.back() < 0.9 * norm(u0));
  }

  TEST_CASE("survival amplitude") {
    const auto& m = testing::small_model();
    const auto& a = testing::small_field();
    PropagatorSpec spec;
    spec.cap = false;
    spec.tol = 1e-11;
    const double lambda = 0.3;
    const auto tr = survival_amplitude(m, a, lambda, spec, 20.0, 40, default_cap(m.grid(), 2.0));
    REQUIRE(tr.t.size() == 41);
    CHECK(std::abs(tr.amplitude[0] - 1.0) <= 1e-14);
    for (std::size_t k = 0; k < tr.t.size(); ++k) CHECK(std::abs(tr.amplitude[k]) <= 1.0 + tr.error_budget[k] + 1e-14);

    // short-time expansion A(t) = 1 - i t <H> - t^2 <H^2> / 2 + O(t^3)
    const auto h = assemble_h_lambda(m.v, a, lambda);
    const auto psi = to_complex(m.psi0);
    const auto hpsi = h.apply(psi);
    const double e1 = inner_product(psi, hpsi).real(), e2 = inner_product(hpsi, hpsi).real();
    const double r3 = std::sqrt(e2) * norm(h.apply(hpsi));  // bounds |<H psi, H^2 psi>|
    CHECK(e1 == doctest::Approx(lambda * lambda * testing::small_coefficients().b + m.e0).epsilon(1e-10));
    for (std::size_t k = 1; k < 6; ++k) {
      const double t = tr.t[k];
      const cplx taylor(1.0 - 0.5 * t * t * e2, -t * e1);
      CHECK(std::abs(tr.amplitude[k] - taylor) <= r3 * t * t * t + 1e-10);
    }

    // sign of lambda, with the layer on
    PropagatorSpec capped;
    capped.tol = 1e-10;
    const auto p = survival_amplitude(m, a, 0.3, capped, 50.0, 30, default_cap(m.grid(), 2.0));
    const auto n = survival_amplitude(m, a, -0.3, capped, 50.0, 30, default_cap(m.grid(), 2.0));
    for (std::size_t k = 0; k < p.t.size(); ++k)
      CHECK(std::abs(p.amplitude[k] - n.amplitude[k]) <= 2.0 * std::max(p.error_budget[k], n.error_budget[k]) + 1e-13);
  }

  TEST_CASE("window filter") {
    const auto& m = testing::small_model();
    const auto& a = testing::small_field();
    const auto h = assemble_h_lambda(m.v, a, 0.3);
    const auto [lo, hi] = h.matrix().gershgorin_interval();
    CHECK(window_function(0.5 * (lo + hi), lo, hi, 0.05) == doctest::Approx(1.0));
    CHECK(window_function(lo, lo, hi, 0.05) == doctest::Approx(0.5).epsilon(1e-6));

    // a window reaching well past the spectrum acts as the identity
    const double margin = hi - lo;
    ResonanceEstimate centre;
    centre.x0 = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo) + margin;
    PropagatorSpec spec;
    spec.tol = 1e-10;
    const auto plain = survival_amplitude(m, a, 0.3, spec, 30.0, 20, default_cap(m.grid(), 2.0));
    const auto filtered = windowed_survival(m, a, 0.3, centre, half, spec, 30.0, 20, default_cap(m.grid(), 2.0));
    CHECK(filtered.windowed);
    CHECK(filtered.filter_mass == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t k = 0; k < plain.t.size(); ++k)
      CHECK(std::abs(plain.amplitude[k] - filtered.amplitude[k]) <=
            plain.error_budget[k] + filtered.error_budget[k] + 1e-8);

    // narrow window around the resonance keeps most of psi0 once eps is small
    const auto& c = testing::small_coefficients();
    auto leak = [&](double lambda) {
      const double be = c.btil * lambda * lambda;
      return 1.0 - apply_window_filter(assemble_h_lambda(m.v, a, lambda), to_complex(m.psi0), 0.75 * be, 1.25 * be)
                       .mass;
    };
    const double l1 = leak(0.3), l2 = leak(0.15);
    CHECK(l2 < l1);
    CHECK(l2 < 0.5);

    FilterOptions tight;
    tight.max_steps = 10;
    tight.check_every = 5;
    CHECK_THROWS_AS(apply_window_filter(h, to_complex(m.psi0), 0.0, 0.01, tight), NumericalError);
  }

  TEST_CASE("exponential fit on synthetic signals") {
    const auto exact = fit_exponential(synthetic(0.3, 0.01, 400.0, 400));
    CHECK(exact.estimate.gamma == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(exact.estimate.x0 == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(exact.estimate.method == EstimateMethod::time_fit);
    CHECK(exact.window.t_lo >= 0.1 / 0.01 * 0.99);
    CHECK(exact.window.t_hi <= 3.0 / 0.01 * 1.01);
    CHECK_FALSE(exact.short_window);
    CHECK(!exact.candidates.empty());

    for (unsigned seed = 1; seed <= 5; ++seed) {
      const auto noisy = fit_exponential(synthetic(0.3, 0.01, 400.0, 400, 0.01, seed));
      CHECK(noisy.estimate.gamma == doctest::Approx(0.01).epsilon(0.05));
      CHECK(noisy.estimate.x0 == doctest::Approx(0.3).epsilon(0.05));
    }

    const auto flat = fit_exponential(synthetic(0.0, 0.0, 100.0, 50));
    CHECK(flat.estimate.gamma == 0.0);
    CHECK(flat.estimate.x0 == 0.0);
    CHECK_FALSE(flat.estimate.valid);

    auto bumpy = synthetic(0.3, 0.01, 400.0, 400);
    for (std::size_t k = 0; k < bumpy.t.size(); ++k)
      bumpy.amplitude[k] *= 1.0 + 0.5 * std::sin(0.05 * bumpy.t[k]) * (bumpy.t[k] > 20.0);
    CHECK_THROWS_AS(fit_exponential(bumpy), NumericalError);

    SurvivalTrace tiny;
    tiny.t = {0.0, 1.0};
    tiny.amplitude = {1.0, 0.9};
    CHECK_THROWS_AS(fit_exponential(tiny), NumericalError);
  }

  TEST_CASE("trace csv") {
    const auto tr = synthetic(0.3, 0.01, 10.0, 4);
    const auto path = std::filesystem::temp_directory_path() / "mtr_trace.csv";
    write_trace_csv(tr, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,re,im,abs2,norm,error_budget");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 5);
  }
}
