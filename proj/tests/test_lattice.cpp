#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fixture.hpp"
#include "mtr/field_io.hpp"
#include "mtr/lattice.hpp"

using namespace mtr;

namespace {

// Tensor Gauss-Legendre rule on [-L, L]^3, panels x 8 nodes per axis.
template <typename F>
double cube_quadrature(double L, int panels, F&& f) {
  static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  std::vector<double> nodes, weights;
  const double pw = 2.0 * L / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = -L + (p + 0.5) * pw;
    for (int q = 0; q < 4; ++q)
      for (int s : {-1, 1}) {
        nodes.push_back(c + s * xg[q] * pw / 2);
        weights.push_back(wg[q] * pw / 2);
      }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      for (std::size_t k = 0; k < nodes.size(); ++k)
        acc += weights[i] * weights[j] * weights[k] * f(nodes[i], nodes[j], nodes[k]);
  return acc;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("grid spacing and coordinates") {
    GridSpec g(1.0, 3);
    CHECK(g.spacing == 0.5);
    CHECK(g.coord(0) == -0.5);
    CHECK(g.coord(1) == 0.0);
    CHECK(g.coord(2) == 0.5);

    const GridSpec big = build_grid(12.0, 48);
    CHECK(big.spacing == doctest::Approx(24.0 / 49.0).epsilon(1e-15));
    CHECK(big.size() == 48u * 48u * 48u);
    CHECK(big.index(1, 0, 0) == 48u * 48u);
    CHECK(big.index(0, 0, 1) == 1u);

    CHECK_THROWS_AS(build_grid(0.0, 8), ConfigError);
    CHECK_THROWS_AS(build_grid(-1.0, 8), ConfigError);
    CHECK_THROWS_AS(build_grid(1.0, 3), ConfigError);
  }

  TEST_CASE("inner product") {
    GridSpec g(1.0, 3);
    RealField one(g, 1.0);
    CHECK(inner_product(one, one).real() == doctest::Approx(3.375).epsilon(1e-15));

    const GridSpec g8 = build_grid(2.0, 8);
    const auto f = testing::random_real(g8, 1), h = testing::random_real(g8, 2);
    CHECK(inner_product(f, h).imag() == 0.0);

    const auto u = testing::random_complex(g8, 3), v = testing::random_complex(g8, 4);
    const cplx uv = inner_product(u, v), vu = inner_product(v, u);
    CHECK(std::abs(uv - std::conj(vu)) <= 1e-13 * std::abs(uv));
    CHECK_THROWS_AS(inner_product(u, testing::random_complex(build_grid(2.0, 9), 5)), GridMismatch);
  }

  TEST_CASE("gaussian norm converges under refinement") {
    // int exp(-r^2) = pi^{3/2}; the box truncation is below 1e-15 at L = 6.
    const double exact = std::pow(std::numbers::pi, 1.5);
    double prev = 1.0;
    for (int n : {11, 23, 47}) {
      const GridSpec g = build_grid(6.0, n);
      const auto f = RealField::sample(g, [](double x, double y, double z) {
        return std::exp(-(x * x + y * y + z * z) / 2);
      });
      const double err = std::abs(inner_product(f, f).real() - exact) / exact;
      CHECK(err <= g.spacing * g.spacing);
      CHECK(err <= prev);
      prev = err;
    }
  }

  TEST_CASE("weighted norm") {
    const GridSpec g = build_grid(4.0, 12);
    CHECK(weighted_norm(RealField(g), 1.0) == 0.0);
    const auto f = testing::random_complex(g, 7);
    CHECK(weighted_norm(f, 0.0) == doctest::Approx(std::sqrt(inner_product(f, f).real())).epsilon(1e-13));

    // f = <x>^-2 with s = 1 integrates (1 + r^2)^-1, which grows like the box.
    auto weighted = [](double L, int n) {
      const GridSpec gg = build_grid(L, n);
      return weighted_norm(RealField::sample(gg, [](double x, double y, double z) {
                             return 1.0 / (1.0 + x * x + y * y + z * z);
                           }), 1.0);
    };
    for (double L : {4.0, 8.0}) {
      const int n = static_cast<int>(std::lround(L * 12)) - 1;  // h = 1/6
      const double oracle = std::sqrt(cube_quadrature(L, 16, [](double x, double y, double z) {
        return 1.0 / (1.0 + x * x + y * y + z * z);
      }));
      const double h = 2 * L / (n + 1);
      // Dirichlet sums drop the boundary layer, an O(h) error for a field that is nonzero on the faces.
      CHECK(std::abs(weighted(L, n) - oracle) / oracle <= 2.0 * h / L);
    }
    CHECK(std::isfinite(weighted(4.0, 47)));
    CHECK(weighted(8.0, 95) > weighted(4.0, 47));
  }

  TEST_CASE("curl of a linear field is the constant unit field") {
    const GridSpec g = build_grid(3.0, 10);
    VectorField a(RealField::sample(g, [](double, double y, double) { return -0.5 * y; }),
                  RealField::sample(g, [](double x, double, double) { return 0.5 * x; }), RealField(g));
    const VectorField b = curl(a);
    const int n = g.points;
    double dev = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          dev = std::max(dev, std::abs(b[0].at(i, j, k)));
          dev = std::max(dev, std::abs(b[1].at(i, j, k)));
          dev = std::max(dev, std::abs(b[2].at(i, j, k) - 1.0));
        }
    CHECK(dev <= 1e-13);
  }

  TEST_CASE("curl of a gradient vanishes to second order") {
    auto curl_norm = [](int n) {
      const GridSpec g = build_grid(3.0, n);
      auto phi_grad = [](int axis) {
        return [axis](double x, double y, double z) {
          // phi = sin(x + y) exp(-q/4)
          const double q = x * x + 2 * y * y + 0.5 * z * z;
          const double ex = std::exp(-q / 4), s = std::sin(x + y), c = std::cos(x + y);
          if (axis == 0) return ex * (c - s * x / 2);
          if (axis == 1) return ex * (c - s * y);
          return ex * (-s * z / 4);
        };
      };
      VectorField a(RealField::sample(g, phi_grad(0)), RealField::sample(g, phi_grad(1)),
                    RealField::sample(g, phi_grad(2)));
      const VectorField b = curl(a);
      return std::max({interior_max_abs(b[0], 2), interior_max_abs(b[1], 2), interior_max_abs(b[2], 2)});
    };
    const double e1 = curl_norm(29), e2 = curl_norm(59);
    // central differences of a gradient commute up to O(h^2) truncation
    CHECK(e1 < 0.05);
    const double slope = std::log(e1 / e2) / std::log(60.0 / 30.0);
    CHECK(slope >= 1.8);
  }

  TEST_CASE("divergence of curl of a gaussian azimuthal field") {
    auto div_curl = [](int n) {
      const GridSpec g = build_grid(3.0, n);
      auto comp = [](int axis) {
        return [axis](double x, double y, double z) {
          const double e = std::exp(-(x * x + y * y + z * z));
          return axis == 0 ? -y * e : axis == 1 ? x * e : 0.0;
        };
      };
      VectorField a(RealField::sample(g, comp(0)), RealField::sample(g, comp(1)), RealField::sample(g, comp(2)));
      return interior_max_abs(divergence(curl(a)), 2);
    };
    const double h1 = 6.0 / 30, h2 = 6.0 / 60;
    const double e1 = div_curl(29), e2 = div_curl(59);
    CHECK(e1 <= 10 * h1 * h1);
    CHECK(e2 <= 10 * h2 * h2);
  }

  TEST_CASE("partial derivative refines at second order") {
    auto err = [](int n) {
      const GridSpec g = build_grid(3.0, n);
      const auto f = RealField::sample(g, [](double x, double y, double z) {
        return x * std::exp(-(x * x + y * y + z * z));
      });
      double e = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
            const double exact = (1 - 2 * x * x) * std::exp(-(x * x + y * y + z * z));
            e = std::max(e, std::abs(partial(f, 0, i, j, k) - exact));
          }
      return e;
    };
    const double e1 = err(23), e2 = err(47), e3 = err(95);
    const double s1 = std::log(e1 / e2) / std::log(2.0), s2 = std::log(e2 / e3) / std::log(2.0);
    CHECK(s1 == doctest::Approx(2.0).epsilon(0.1));
    CHECK(s2 == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("field dump round trip and header") {
    const auto dir = std::filesystem::temp_directory_path() / "mtr_lattice_io";
    std::filesystem::create_directories(dir);
    const GridSpec g = build_grid(2.5, 9);
    const auto r = testing::random_real(g, 11);
    const auto c = testing::random_complex(g, 12);
    write_field(dir / "r.bin", r);
    write_field(dir / "c.bin", c);

    std::ifstream in(dir / "r.bin", std::ios::binary);
    char header[32];
    in.read(header, 32);
    CHECK(std::string(header, 8) == "MTRFIELD");
    std::uint32_t n = 0, tag = 0;
    double L = 0.0;
    std::memcpy(&n, header + 8, 4);
    std::memcpy(&tag, header + 12, 4);
    std::memcpy(&L, header + 16, 8);
    CHECK(n == 9u);
    CHECK(tag == kDtypeReal);
    CHECK(L == 2.5);
    CHECK(std::filesystem::file_size(dir / "r.bin") == 32 + 8 * g.size());
    CHECK(std::filesystem::file_size(dir / "c.bin") == 32 + 16 * g.size());

    const auto r2 = read_real_field(dir / "r.bin");
    CHECK(r2.grid() == g);
    CHECK(r2.data() == r.data());
    const auto c2 = std::get<ComplexField>(read_field(dir / "c.bin"));
    CHECK(c2.data() == c.data());
    CHECK_THROWS_AS(read_real_field(dir / "c.bin"), ConfigError);

    std::ofstream(dir / "junk.bin") << "not a field";
    CHECK_THROWS(read_field(dir / "junk.bin"));
  }
}
