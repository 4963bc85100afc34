#include "mtr/operators.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace mtr {

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::h0: return "h0";
    case OperatorKind::h_lambda: return "h_lambda";
    case OperatorKind::y: return "y";
    case OperatorKind::z: return "z";
    case OperatorKind::cap: return "cap";
    case OperatorKind::composite: return "composite";
  }
  return "unknown";
}

LatticeOperator::LatticeOperator(GridSpec grid, OperatorKind kind, CsrMatrix matrix, bool hermitian)
    : grid_(grid), kind_(kind), matrix_(std::move(matrix)), hermitian_(hermitian) {
  if (matrix_.rows() != grid_.size()) throw GridMismatch("operator size does not match grid");
}

ComplexField LatticeOperator::apply(const ComplexField& f) const {
  require_same_grid(grid_, f.grid());
  ComplexField out(grid_);
  matrix_.apply(f.values(), out.values());
  return out;
}

cplx LatticeOperator::rayleigh_quotient(const ComplexField& f) const {
  return inner_product(f, apply(f)) / inner_product(f, f);
}

LatticeOperator LatticeOperator::plus(const LatticeOperator& other, cplx scale) const {
  require_same_grid(grid_, other.grid_);
  const bool herm = hermitian_ && other.hermitian_ && scale.imag() == 0.0;
  return LatticeOperator(grid_, OperatorKind::composite, add(matrix_, other.matrix_, 1.0, scale), herm);
}

void LatticeOperator::write_coordinates(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  const auto& rp = matrix_.row_ptr();
  char buf[128];
  for (std::size_t r = 0; r < matrix_.rows(); ++r)
    for (std::size_t p = rp[r]; p < rp[r + 1]; ++p) {
      const cplx v = matrix_.vals()[p];
      std::snprintf(buf, sizeof buf, "%zu %d %.17g %.17g\n", r, matrix_.cols()[p], v.real(), v.imag());
      out << buf;
    }
}

namespace {

// Seven-point pattern with columns in increasing order. off(s, axis, dir)
// gives the coupling from site s to its neighbour along axis in direction dir.
template <typename Diag, typename Off>
CsrMatrix assemble_stencil(const GridSpec& g, Diag&& diag, Off&& off) {
  const int n = g.points;
  const std::size_t N = g.size();
  std::vector<std::size_t> rp(N + 1, 0);
  std::vector<std::int32_t> cols;
  std::vector<cplx> vals;
  cols.reserve(7 * N);
  vals.reserve(7 * N);
  const std::array<std::ptrdiff_t, 3> stride{static_cast<std::ptrdiff_t>(n) * n, n, 1};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const std::array<int, 3> p{i, j, k};
        const std::size_t s = g.index(i, j, k);
        auto push = [&](std::size_t c, cplx v) {
          cols.push_back(static_cast<std::int32_t>(c));
          vals.push_back(v);
        };
        for (int axis = 0; axis < 3; ++axis)
          if (p[static_cast<std::size_t>(axis)] > 0)
            push(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s) - stride[static_cast<std::size_t>(axis)]),
                 off(s, axis, -1));
        push(s, diag(s));
        for (int axis = 2; axis >= 0; --axis)
          if (p[static_cast<std::size_t>(axis)] < n - 1)
            push(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s) + stride[static_cast<std::size_t>(axis)]),
                 off(s, axis, +1));
        rp[s + 1] = cols.size();
      }
  return CsrMatrix(N, std::move(rp), std::move(cols), std::move(vals));
}

std::size_t neighbour(const GridSpec& g, std::size_t s, int axis, int dir) {
  const auto n = static_cast<std::size_t>(g.points);
  const std::size_t stride = axis == 0 ? n * n : (axis == 1 ? n : 1);
  return dir > 0 ? s + stride : s - stride;
}

}  // namespace

LatticeOperator assemble_h0(const RealField& potential) {
  const GridSpec& g = potential.grid();
  const double ih2 = 1.0 / (g.spacing * g.spacing);
  auto m = assemble_stencil(
      g, [&](std::size_t s) { return cplx(6.0 * ih2 + potential[s], 0.0); },
      [&](std::size_t, int, int) { return cplx(-ih2, 0.0); });
  return LatticeOperator(g, OperatorKind::h0, std::move(m), true);
}

LatticeOperator assemble_h0(const ComplexField& potential) {
  RealField v(potential.grid());
  for (std::size_t s = 0; s < v.size(); ++s) {
    if (potential[s].imag() != 0.0) throw ConfigError("H0 requires a real potential");
    v[s] = potential[s].real();
  }
  return assemble_h0(v);
}

LatticeOperator assemble_y(const VectorField& a) {
  const GridSpec& g = a.grid();
  const double i2h = 1.0 / (2.0 * g.spacing);
  auto m = assemble_stencil(
      g, [](std::size_t) { return cplx(0.0, 0.0); },
      [&](std::size_t s, int axis, int dir) {
        const std::size_t t = neighbour(g, s, axis, dir);
        return cplx(0.0, dir * (a[axis][s] + a[axis][t]) * i2h);
      });
  return LatticeOperator(g, OperatorKind::y, std::move(m), true);
}

LatticeOperator assemble_z(const VectorField& a) {
  const GridSpec& g = a.grid();
  std::vector<cplx> d(g.size());
  for (std::size_t s = 0; s < d.size(); ++s) d[s] = a[0][s] * a[0][s] + a[1][s] * a[1][s] + a[2][s] * a[2][s];
  return LatticeOperator(g, OperatorKind::z, CsrMatrix::diagonal(d), true);
}

LatticeOperator assemble_h_lambda(const RealField& potential, const VectorField& a, double lambda) {
  const GridSpec& g = potential.grid();
  require_same_grid(g, a.grid());
  const double ih2 = 1.0 / (g.spacing * g.spacing);
  const double i2h = 1.0 / (2.0 * g.spacing);
  const double l2 = lambda * lambda;
  auto m = assemble_stencil(
      g,
      [&](std::size_t s) {
        const double z = a[0][s] * a[0][s] + a[1][s] * a[1][s] + a[2][s] * a[2][s];
        return cplx(6.0 * ih2 + potential[s], 0.0) + l2 * z;
      },
      [&](std::size_t s, int axis, int dir) {
        const std::size_t t = neighbour(g, s, axis, dir);
        return cplx(-ih2, 0.0) + lambda * cplx(0.0, dir * (a[axis][s] + a[axis][t]) * i2h);
      });
  return LatticeOperator(g, OperatorKind::h_lambda, std::move(m), true);
}

cplx inner_product(const NineField& f, const NineField& g) {
  cplx acc{0.0, 0.0};
  for (std::size_t r = 0; r < 9; ++r) acc += inner_product(f[r], g[r]);
  return acc;
}

ComplexField central_difference(const ComplexField& f, int axis) {
  const GridSpec& g = f.grid();
  const int n = g.points;
  const double i2h = 1.0 / (2.0 * g.spacing);
  ComplexField out(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::array<int, 3> p{i, j, k};
        auto& c = p[static_cast<std::size_t>(axis)];
        const int c0 = c;
        cplx up{0.0, 0.0}, down{0.0, 0.0};
        if (c0 < n - 1) {
          c = c0 + 1;
          up = f.at(p[0], p[1], p[2]);
        }
        if (c0 > 0) {
          c = c0 - 1;
          down = f.at(p[0], p[1], p[2]);
        }
        out.at(i, j, k) = (up - down) * i2h;
      }
  return out;
}

FactorizedPerturbation::FactorizedPerturbation(const VectorField& a, double epsilon)
    : a_(a), root_(a.grid()), signed_root_(a.grid()), epsilon_(epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  for (int j = 0; j < 3; ++j)
    for (std::size_t s = 0; s < a.grid().size(); ++s) {
      const double v = a[j][s];
      const double r = std::sqrt(std::abs(v));
      root_[j][s] = r;
      signed_root_[j][s] = v > 0.0 ? r : (v < 0.0 ? -r : 0.0);
    }
  y_ = assemble_y(a);
  z_ = assemble_z(a);
}

NineField FactorizedPerturbation::apply(const ComplexField& f) const {
  require_same_grid(grid(), f.grid());
  const double e2 = std::sqrt(epsilon_);
  const double e4 = std::sqrt(e2);
  NineField out;
  for (int j = 0; j < 3; ++j) {
    const auto u = static_cast<std::size_t>(j);
    ComplexField df = central_difference(f, j);
    out[u] = ComplexField(grid());
    out[u + 3] = ComplexField(grid());
    out[u + 6] = ComplexField(grid());
    for (std::size_t s = 0; s < f.size(); ++s) {
      out[u][s] = e2 * a_[j][s] * f[s];
      out[u + 3][s] = e4 * root_[j][s] * f[s];
      out[u + 6][s] = e4 * signed_root_[j][s] * cplx(0.0, -1.0) * df[s];
    }
  }
  return out;
}

ComplexField FactorizedPerturbation::apply_adjoint(const NineField& g) const {
  const double e2 = std::sqrt(epsilon_);
  const double e4 = std::sqrt(e2);
  ComplexField out(grid());
  for (int j = 0; j < 3; ++j) {
    const auto u = static_cast<std::size_t>(j);
    // (b P)^* = P b, with P = -i D symmetric because D is antisymmetric.
    ComplexField bg(grid());
    for (std::size_t s = 0; s < out.size(); ++s) bg[s] = signed_root_[j][s] * g[u + 6][s];
    ComplexField pbg = central_difference(bg, j);
    for (std::size_t s = 0; s < out.size(); ++s)
      out[s] += e2 * a_[j][s] * g[u][s] + e4 * root_[j][s] * g[u + 3][s] + e4 * cplx(0.0, -1.0) * pbg[s];
  }
  return out;
}

NineField FactorizedPerturbation::apply_signature(const NineField& g) {
  NineField out;
  for (std::size_t j = 0; j < 3; ++j) {
    out[j] = g[j];
    out[j + 3] = g[j + 6];
    out[j + 6] = g[j + 3];
    for (auto& v : out[j + 3].values()) v = -v;
    for (auto& v : out[j + 6].values()) v = -v;
  }
  return out;
}

ComplexField FactorizedPerturbation::apply_direct(const ComplexField& f) const {
  ComplexField yf = y_.apply(f);
  ComplexField zf = z_.apply(f);
  const double e2 = std::sqrt(epsilon_);
  for (std::size_t s = 0; s < yf.size(); ++s) yf[s] = e2 * yf[s] + epsilon_ * zf[s];
  return yf;
}

double CapSpec::ramp(double u) {
  const double c = std::clamp(u, 0.0, 1.0);
  return c * c * c;
}

double CapSpec::profile(double r) const {
  if (r <= onset) return 0.0;
  return strength * ramp((r - onset) / width);
}

CapSpec default_cap(const GridSpec& grid, double strength) {
  return CapSpec{0.6 * grid.extent, 0.3 * grid.extent, strength};
}

double cap_reflection_1d(const CapSpec& spec, double spacing, double wall, double k) {
  if (!(spacing > 0.0) || !(k > 0.0) || k * spacing >= std::numbers::pi)
    throw ConfigError("cap_reflection_1d needs spacing > 0 and 0 < k h < pi");
  const double h = spacing;
  const double energy = (2.0 - 2.0 * std::cos(k * h)) / (h * h);
  // Backward recurrence from the wall: psi(wall) = 0, psi(wall - h) = 1.
  double x = wall - h;
  cplx next = 0.0, cur = 1.0;
  while (x > spec.onset - 2.0 * h) {
    const cplx c(0.0, -spec.profile(x));
    const cplx prev = (2.0 + h * h * (c - energy)) * cur - next;
    next = cur;
    cur = prev;
    x -= h;
  }
  // cur = psi(x), next = psi(x + h), both outside the layer:
  // psi = a e^{ikx} + b e^{-ikx}.
  const cplx e1 = std::exp(cplx(0.0, k * x)), e2 = std::exp(cplx(0.0, k * (x + h)));
  const cplx det = e1 / e2 - e2 / e1;
  const cplx a = (cur / e2 - next / e1) / det;
  const cplx b = (next * e1 - cur * e2) / det;
  return std::norm(b) / std::norm(a);
}

double tune_cap_strength(const CapSpec& spec, double spacing, double wall, double k_lo, double k_hi) {
  const double k_max = 3.0 / spacing;
  k_hi = std::min(k_hi, k_max);
  if (!(k_lo > 0.0) || !(k_lo <= k_hi)) throw ConfigError("tune_cap_strength needs 0 < k_lo <= k_hi < 3 / h");
  constexpr int kSamples = 9;
  auto worst = [&](double log_eta) {
    CapSpec c = spec;
    c.strength = std::exp(log_eta);
    double w = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double k = k_lo * std::pow(k_hi / k_lo, i / double(kSamples - 1));
      w = std::max(w, cap_reflection_1d(c, spacing, wall, k));
    }
    return w;
  };
  // coarse scan over 1e-2 .. 1e2, then golden section around the best cell
  const double lo = std::log(1e-2), hi = std::log(1e2);
  constexpr int kScan = 41;
  const double step = (hi - lo) / (kScan - 1);
  int best = 0;
  double best_val = worst(lo);
  for (int i = 1; i < kScan; ++i) {
    const double v = worst(lo + i * step);
    if (v < best_val) best_val = v, best = i;
  }
  double a = lo + std::max(0, best - 1) * step, b = lo + std::min(kScan - 1, best + 1) * step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = worst(c), fd = worst(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - phi * (b - a), fc = worst(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + phi * (b - a), fd = worst(d);
    }
  }
  const double x = fc < fd ? c : d;
  return std::exp(std::min(fc, fd) <= best_val ? x : lo + best * step);
}

LatticeOperator assemble_cap(const CapSpec& spec, const GridSpec& grid) {
  if (!(spec.width > 0.0) || spec.onset < 0.0) throw ConfigError("CAP needs onset >= 0 and width > 0");
  if (spec.onset + spec.width > grid.extent * (1.0 + 1e-12))
    throw ConfigError("CAP layer exceeds the box: onset + width > L");
  if (spec.strength < 0.0) throw ConfigError("CAP strength must be >= 0");
  const int n = grid.points;
  std::vector<cplx> d(grid.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r = std::sqrt(grid.coord(i) * grid.coord(i) + grid.coord(j) * grid.coord(j) +
                                   grid.coord(k) * grid.coord(k));
        d[grid.index(i, j, k)] = cplx(0.0, -spec.profile(r));
      }
  return LatticeOperator(grid, OperatorKind::cap, CsrMatrix::diagonal(d), spec.strength == 0.0);
}

}  // namespace mtr
