#include "mtr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtr/field_io.hpp"
#include "mtr/operators.hpp"
#include "mtr/spectral.hpp"

namespace mtr {

PotentialFamily parse_potential_family(std::string_view tag) {
  if (tag == "anisotropic-gaussian") return PotentialFamily::anisotropic_gaussian;
  if (tag == "inverse-square-regularized") return PotentialFamily::inverse_square_regularized;
  if (tag == "user-table") return PotentialFamily::user_table;
  throw ConfigError("unknown potential family '" + std::string(tag) + "'");
}

VectorPotentialFamily parse_vector_potential_family(std::string_view tag) {
  if (tag == "gaussian-azimuthal") return VectorPotentialFamily::gaussian_azimuthal;
  if (tag == "compact-bump") return VectorPotentialFamily::compact_bump;
  if (tag == "user-table") return VectorPotentialFamily::user_table;
  throw ConfigError("unknown vector-potential family '" + std::string(tag) + "'");
}

std::string_view to_string(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::anisotropic_gaussian: return "anisotropic-gaussian";
    case PotentialFamily::inverse_square_regularized: return "inverse-square-regularized";
    case PotentialFamily::user_table: return "user-table";
  }
  return "unknown";
}

std::string_view to_string(VectorPotentialFamily f) {
  switch (f) {
    case VectorPotentialFamily::gaussian_azimuthal: return "gaussian-azimuthal";
    case VectorPotentialFamily::compact_bump: return "compact-bump";
    case VectorPotentialFamily::user_table: return "user-table";
  }
  return "unknown";
}

RealField eval_potential(const PotentialSpec& spec, const GridSpec& grid) {
  const double g = spec.coupling;
  const double ia2 = 1.0 / (spec.width_a * spec.width_a);
  const double ib2 = 1.0 / (spec.width_b * spec.width_b);
  switch (spec.family) {
    case PotentialFamily::anisotropic_gaussian:
      if (!(spec.width_a > 0.0 && spec.width_b > 0.0)) throw ConfigError("potential widths must be > 0");
      return RealField::sample(grid, [&](double x1, double x2, double x3) {
        return -g * std::exp(-x1 * x1 * ia2 - (x2 * x2 + x3 * x3) * ib2);
      });
    case PotentialFamily::inverse_square_regularized:
      if (!(spec.width_a > 0.0 && spec.width_b > 0.0)) throw ConfigError("potential widths must be > 0");
      return RealField::sample(grid, [&](double x1, double x2, double x3) {
        const double q = 1.0 + x1 * x1 * ia2 + (x2 * x2 + x3 * x3) * ib2;
        return -g / (q * q);
      });
    case PotentialFamily::user_table: {
      RealField t = read_real_field(spec.table);
      require_same_grid(grid, t.grid());
      for (auto& v : t.values()) v *= -g;
      return t;
    }
  }
  throw ConfigError("unknown potential family");
}

VectorField eval_vector_potential(const VectorPotentialSpec& spec, const GridSpec& grid) {
  const double amp = spec.amplitude;
  if (spec.family == VectorPotentialFamily::user_table) {
    VectorField a(read_real_field(spec.tables[0]), read_real_field(spec.tables[1]), read_real_field(spec.tables[2]));
    require_same_grid(grid, a.grid());
    return a;
  }
  if (!(spec.width > 0.0)) throw ConfigError("vector-potential width must be > 0");
  const double iw2 = 1.0 / (spec.width * spec.width);
  auto envelope = [&](double r2) {
    if (spec.family == VectorPotentialFamily::gaussian_azimuthal) return amp * std::exp(-r2 * iw2);
    const double u2 = r2 * iw2;
    return u2 < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - u2)) : 0.0;
  };
  VectorField a(grid);
  const int n = grid.points;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double x1 = grid.coord(i), x2 = grid.coord(j), x3 = grid.coord(k);
        const double e = envelope(x1 * x1 + x2 * x2 + x3 * x3);
        const std::size_t s = grid.index(i, j, k);
        a[0][s] = -e * x2;
        a[1][s] = e * x1;
        a[2][s] = 0.0;
      }
  return a;
}

namespace {

template <typename Mag>
DecayFit fit_envelope(const GridSpec& g, Mag&& mag, double r_min, double r_max) {
  if (r_max <= 0.0) r_max = g.extent;
  const double lo = r_max - (r_max - r_min) / 3.0;
  constexpr int kBins = 24;
  std::vector<double> env(kBins, 0.0);
  const double width = (r_max - lo) / kBins;
  const int n = g.points;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r = std::sqrt(g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k));
        if (r < lo || r >= r_max) continue;
        const int b = std::min(kBins - 1, static_cast<int>((r - lo) / width));
        env[static_cast<std::size_t>(b)] = std::max(env[static_cast<std::size_t>(b)], mag(g.index(i, j, k)));
      }
  std::vector<double> xs, ys;
  for (int b = 0; b < kBins; ++b) {
    const double e = env[static_cast<std::size_t>(b)];
    if (e <= 1e3 * std::numeric_limits<double>::min()) continue;
    const double r = lo + (b + 0.5) * width;
    xs.push_back(0.5 * std::log1p(r * r));
    ys.push_back(std::log(e));
  }
  DecayFit fit;
  fit.r_min = lo;
  fit.r_max = r_max;
  if (xs.size() < 3) {
    // Field vanishes identically on the tail window: faster than any power.
    fit.exponent = std::numeric_limits<double>::infinity();
    fit.r_squared = 1.0;
    return fit;
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m, cxy = sxy - sx * sy / m;
  fit.exponent = -cxy / vx;
  fit.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

}  // namespace

DecayFit fit_decay(const RealField& f, double r_min, double r_max) {
  return fit_envelope(f.grid(), [&](std::size_t s) { return std::abs(f[s]); }, r_min, r_max);
}

DecayFit fit_decay(const VectorField& a, double r_min, double r_max) {
  return fit_envelope(
      a.grid(), [&](std::size_t s) { return std::sqrt(a[0][s] * a[0][s] + a[1][s] * a[1][s] + a[2][s] * a[2][s]); },
      r_min, r_max);
}

std::array<double, 3> linear_term_residuals(const RealField& f, const VectorField& a) {
  require_same_grid(f.grid(), a.grid());
  const ComplexField fc = to_complex(f);
  std::array<double, 3> out{};
  for (int j = 0; j < 3; ++j) {
    // (P A + A P) f with P = -i D.
    ComplexField af(f.grid());
    for (std::size_t s = 0; s < f.size(); ++s) af[s] = a[j][s] * f[s];
    const ComplexField daf = central_difference(af, j);
    const ComplexField df = central_difference(fc, j);
    ComplexField t(f.grid());
    for (std::size_t s = 0; s < f.size(); ++s) t[s] = cplx(0.0, -1.0) * (daf[s] + a[j][s] * df[s]);
    out[static_cast<std::size_t>(j)] = std::abs(inner_product(fc, t));
  }
  return out;
}

bool AssumptionReport::decay_ok() const {
  return potential_decay.exponent > decay_threshold && vector_potential_decay.exponent > decay_threshold;
}

bool AssumptionReport::linear_term_ok() const {
  return std::all_of(linear_term_residuals.begin(), linear_term_residuals.end(),
                     [&](double r) { return r <= linear_term_threshold; });
}

AssumptionReport check_assumptions(const RealField& v, const VectorField& a, const ThresholdModel& threshold,
                                   double fit_radius) {
  require_same_grid(v.grid(), a.grid());
  require_same_grid(v.grid(), threshold.psi0.grid());
  if (!(std::abs(threshold.e0) <= threshold.tol_eig))
    throw AssumptionError("threshold model is not tuned: |E0| exceeds tol_eig");
  AssumptionReport rep;
  const GridSpec& g = v.grid();
  const double rmax = fit_radius > 0.0 ? fit_radius : g.extent;
  rep.potential_decay = fit_decay(v, 0.0, rmax);
  rep.vector_potential_decay = fit_decay(a, 0.0, rmax);
  rep.div_b_max = interior_max_abs(divergence(curl(a)), 2);
  rep.linear_term_residuals = linear_term_residuals(threshold.psi0, a);
  rep.simplicity_gap = threshold.gap;
  rep.psi0_decay = fit_decay(threshold.psi0, 0.0, rmax);
  // A zero resonance would leave a near-zero state with r^-1 tails; a genuine
  // p-type threshold eigenfunction decays like r^-2 or faster.
  rep.resonance_heuristic_pass = threshold.gap > 10.0 * threshold.tol_eig &&
                                 rep.psi0_decay.exponent >= rep.psi0_decay_threshold;
  return rep;
}

}  // namespace mtr
