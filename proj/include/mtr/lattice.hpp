#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mtr/errors.hpp"

namespace mtr {

using cplx = std::complex<double>;

/// Uniform Cartesian grid on the box [-L, L]^3 with homogeneous Dirichlet
/// boundary. Interior sites only: x_i = -L + (i + 1) h, h = 2L / (n + 1).
///
/// Site ordering is row-major with x1 slowest: index(i, j, k) = (i n + j) n + k,
/// where i, j, k step along x1, x2, x3. Every module uses this ordering.
struct GridSpec {
  double extent = 0.0;  // L
  int points = 0;       // n, per axis
  double spacing = 0.0; // h

  GridSpec() = default;
  /// Low-level constructor; only requires L > 0 and n >= 1. Use build_grid()
  /// for user-facing configuration.
  GridSpec(double extent, int points);

  double coord(int i) const { return -extent + (i + 1) * spacing; }
  std::size_t size() const {
    const auto n = static_cast<std::size_t>(points);
    return n * n * n;
  }
  std::size_t index(int i, int j, int k) const {
    const auto n = static_cast<std::size_t>(points);
    return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n +
           static_cast<std::size_t>(k);
  }
  double cell_volume() const { return spacing * spacing * spacing; }

  bool operator==(const GridSpec&) const = default;
};

/// Validated grid for experiments: L > 0 and n >= 8.
GridSpec build_grid(double extent, int points);

void require_same_grid(const GridSpec& a, const GridSpec& b);

template <typename T>
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}
  Field(const GridSpec& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ConfigError("field length does not match grid");
  }

  /// Samples f(x1, x2, x3) at every site.
  template <typename F>
  static Field sample(const GridSpec& grid, F&& f) {
    Field out(grid);
    const int n = grid.points;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out.values_[grid.index(i, j, k)] = f(grid.coord(i), grid.coord(j), grid.coord(k));
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& data() { return values_; }
  const std::vector<T>& data() const { return values_; }

  T& operator[](std::size_t s) { return values_[s]; }
  const T& operator[](std::size_t s) const { return values_[s]; }
  T& at(int i, int j, int k) { return values_[grid_.index(i, j, k)]; }
  const T& at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }

 private:
  GridSpec grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// Three real components on one grid (A or B = curl A).
struct VectorField {
  std::array<RealField, 3> comp;

  VectorField() = default;
  explicit VectorField(const GridSpec& grid) : comp{RealField(grid), RealField(grid), RealField(grid)} {}
  VectorField(RealField a1, RealField a2, RealField a3);

  const GridSpec& grid() const { return comp[0].grid(); }
  RealField& operator[](int j) { return comp[static_cast<std::size_t>(j)]; }
  const RealField& operator[](int j) const { return comp[static_cast<std::size_t>(j)]; }
};

ComplexField to_complex(const RealField& f);

/// h^3 * sum conj(f_i) g_i, conjugate-linear in the first slot.
template <typename T, typename U>
cplx inner_product(const Field<T>& f, const Field<U>& g) {
  require_same_grid(f.grid(), g.grid());
  cplx acc{0.0, 0.0};
  const auto fv = f.values();
  const auto gv = g.values();
  for (std::size_t s = 0; s < fv.size(); ++s) {
    if constexpr (std::is_same_v<T, double>)
      acc += fv[s] * cplx(gv[s]);
    else
      acc += std::conj(fv[s]) * cplx(gv[s]);
  }
  return acc * f.grid().cell_volume();
}

/// <x>^s weighted L2 proxy: sqrt(h^3 sum (1 + |x|^2)^s |f|^2).
template <typename T>
double weighted_norm(const Field<T>& f, double s) {
  const GridSpec& g = f.grid();
  const int n = g.points;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r2 = g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k);
        acc += std::pow(1.0 + r2, s) * std::norm(f.at(i, j, k));
      }
  return std::sqrt(acc * g.cell_volume());
}

/// d f / d x_axis: second-order central differences, second-order one-sided
/// in the outermost layer.
double partial(const RealField& f, int axis, int i, int j, int k);

VectorField curl(const VectorField& a);
RealField divergence(const VectorField& a);

/// Max |f| over sites at least `layers` away from every face.
double interior_max_abs(const RealField& f, int layers);

}  // namespace mtr
