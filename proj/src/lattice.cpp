#include "mtr/lattice.hpp"

#include <algorithm>

namespace mtr {

GridSpec::GridSpec(double L, int n) : extent(L), points(n), spacing(2.0 * L / (n + 1)) {
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid extent must be positive");
  if (n < 1) throw ConfigError("grid needs at least one point per axis");
}

GridSpec build_grid(double extent, int points) {
  if (!(extent > 0.0)) throw ConfigError("grid extent L must be > 0");
  if (points < 8) throw ConfigError("grid needs n >= 8 points per axis");
  return GridSpec(extent, points);
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw GridMismatch();
}

VectorField::VectorField(RealField a1, RealField a2, RealField a3) : comp{std::move(a1), std::move(a2), std::move(a3)} {
  require_same_grid(comp[0].grid(), comp[1].grid());
  require_same_grid(comp[0].grid(), comp[2].grid());
}

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid());
  std::copy(f.values().begin(), f.values().end(), out.values().begin());
  return out;
}

double partial(const RealField& f, int axis, int i, int j, int k) {
  const GridSpec& g = f.grid();
  const int n = g.points;
  std::array<int, 3> p{i, j, k};
  const int c = p[static_cast<std::size_t>(axis)];
  auto val = [&](int shift) {
    auto q = p;
    q[static_cast<std::size_t>(axis)] = c + shift;
    return f.at(q[0], q[1], q[2]);
  };
  const double inv2h = 1.0 / (2.0 * g.spacing);
  if (c > 0 && c < n - 1) return (val(1) - val(-1)) * inv2h;
  if (n < 3) throw ConfigError("one-sided differences need n >= 3");
  if (c == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) * inv2h;
  return (3.0 * val(0) - 4.0 * val(-1) + val(-2)) * inv2h;
}

VectorField curl(const VectorField& a) {
  const GridSpec& g = a.grid();
  require_same_grid(g, a[1].grid());
  require_same_grid(g, a[2].grid());
  VectorField b(g);
  const int n = g.points;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        b[0].at(i, j, k) = partial(a[2], 1, i, j, k) - partial(a[1], 2, i, j, k);
        b[1].at(i, j, k) = partial(a[0], 2, i, j, k) - partial(a[2], 0, i, j, k);
        b[2].at(i, j, k) = partial(a[1], 0, i, j, k) - partial(a[0], 1, i, j, k);
      }
  return b;
}

RealField divergence(const VectorField& a) {
  const GridSpec& g = a.grid();
  require_same_grid(g, a[1].grid());
  require_same_grid(g, a[2].grid());
  RealField d(g);
  const int n = g.points;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        d.at(i, j, k) = partial(a[0], 0, i, j, k) + partial(a[1], 1, i, j, k) + partial(a[2], 2, i, j, k);
  return d;
}

double interior_max_abs(const RealField& f, int layers) {
  const int n = f.grid().points;
  double m = 0.0;
  for (int i = layers; i < n - layers; ++i)
    for (int j = layers; j < n - layers; ++j)
      for (int k = layers; k < n - layers; ++k) m = std::max(m, std::abs(f.at(i, j, k)));
  return m;
}

}  // namespace mtr
