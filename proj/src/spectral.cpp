#include "mtr/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mtr/field_io.hpp"

namespace mtr {

double spectral_scale(const LatticeOperator& h) { return h.matrix().gershgorin_radius(); }

namespace {

ComplexField normalized(Vec v, const GridSpec& g) {
  const double nrm = norm2(v) * std::sqrt(g.cell_volume());
  for (auto& x : v) x /= nrm;
  return ComplexField(g, std::move(v));
}

}  // namespace

std::vector<EigenPair> lowest_eigs(const LatticeOperator& h, int k, double target, const EigenOptions& opts) {
  if (!h.hermitian()) throw ConfigError("lowest_eigs needs a Hermitian operator");
  if (k < 1) throw ConfigError("lowest_eigs needs k >= 1");
  const GridSpec& g = h.grid();
  const std::size_t N = h.size();
  const double scale = spectral_scale(h);
  const double tol = opts.tol_res > 0.0 ? opts.tol_res : 1e-9 * scale;
  const auto [lo, hi] = h.matrix().gershgorin_interval();
  if (target < lo - scale || target > hi + scale) {
    std::ostringstream msg;
    msg << "eigensolver did not converge: target " << target << " lies outside the spectral enclosure [" << lo
        << ", " << hi << "]; achieved residuals: none";
    throw NumericalError(msg.str());
  }

  // (-Delta + 1 + max(0, -target))^-1 is positive definite and close to H - target.
  const DirichletLaplacianInverse prec(g, std::min(0.0, target) - 1.0);
  const LinearMap op = [&](std::span<const cplx> x, std::span<cplx> y) {
    h.apply(x, y);
    axpy(-target, x, y);
  };

  Vec q(N);
  if (opts.start) {
    require_same_grid(g, opts.start->grid());
    std::copy(opts.start->values().begin(), opts.start->values().end(), q.begin());
  } else {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nd;
    for (auto& v : q) v = cplx(nd(rng), nd(rng));
  }
  if (opts.project) opts.project(q);
  double qn = norm2(q);
  if (qn == 0.0) throw NumericalError("eigensolver start vector vanishes in the requested sector");
  for (auto& v : q) v /= qn;

  std::vector<Vec> Q;
  Q.push_back(std::move(q));
  std::vector<double> alpha, beta;
  std::vector<double> last_residuals;
  Vec w(N), hx(N);
  SolverOptions inner = opts.inner;

  auto ritz_pairs = [&](const Eigen::MatrixXd& S, const std::vector<int>& idx) {
    std::vector<EigenPair> out;
    for (int i : idx) {
      Vec x(N, cplx{0.0, 0.0});
      for (Eigen::Index j = 0; j < S.rows(); ++j) axpy(S(j, i), Q[static_cast<std::size_t>(j)], x);
      const double xn = norm2(x);
      for (auto& v : x) v /= xn;
      h.apply(x, hx);
      const double ev = dot(x, hx).real();
      axpy(-ev, x, hx);
      EigenPair p;
      p.value = ev;
      p.residual = norm2(hx);
      p.vector = normalized(std::move(x), g);
      out.push_back(std::move(p));
    }
    return out;
  };

  for (int step = 0; step < opts.max_steps; ++step) {
    const auto us = static_cast<std::size_t>(step);
    std::fill(w.begin(), w.end(), cplx{0.0, 0.0});
    minres(op, prec.as_map(), Q[us], w, inner);
    if (opts.project) opts.project(w);
    const double a = dot(Q[us], w).real();
    axpy(-a, Q[us], w);
    if (step > 0) axpy(-beta.back(), Q[us - 1], w);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : Q) axpy(-dot(qi, w), qi, w);
    const double b = norm2(w);
    alpha.push_back(a);
    const int m = step + 1;
    const bool exhausted = b <= 1e-14 * std::abs(a) || m == static_cast<int>(N);
    if (m >= k) {
      Eigen::VectorXd diag(m), sub(std::max(1, m - 1));
      for (int i = 0; i < m; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
      for (int i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub.head(std::max(0, m - 1)), Eigen::ComputeEigenvectors);
      const Eigen::VectorXd& theta = es.eigenvalues();
      const Eigen::MatrixXd& S = es.eigenvectors();
      std::vector<int> order(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
      std::sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(theta(x)) > std::abs(theta(y)); });
      order.resize(static_cast<std::size_t>(k));
      bool candidate = true;
      for (int i : order)
        // |beta s_m| / |theta| bounds the residual up to the size of (H - target) q_{m+1}.
        if (!(std::abs(b * S(m - 1, i)) <= 100.0 * tol * std::abs(theta(i)) || exhausted))
          candidate = false;
      if (candidate) {
        auto pairs = ritz_pairs(S, order);
        last_residuals.clear();
        bool ok = true;
        for (const auto& p : pairs) {
          last_residuals.push_back(p.residual);
          ok = ok && p.residual <= tol;
        }
        if (ok) {
          std::sort(pairs.begin(), pairs.end(), [&](const EigenPair& x, const EigenPair& y) {
            return std::abs(x.value - target) < std::abs(y.value - target);
          });
          return pairs;
        }
      }
    }
    if (exhausted) break;
    beta.push_back(b);
    for (auto& v : w) v /= b;
    Q.push_back(w);
  }
  std::ostringstream msg;
  msg << "eigensolver did not converge within " << opts.max_steps << " Lanczos steps (tol " << tol
      << "); achieved residuals:";
  for (double r : last_residuals) msg << ' ' << r;
  if (last_residuals.empty()) msg << " none";
  throw NumericalError(msg.str());
}

void project_parity(const GridSpec& grid, const Parity& parity, std::span<cplx> f) {
  const int n = grid.points;
  Vec copy(f.begin(), f.end());
  for (int axis = 0; axis < 3; ++axis) {
    const double sgn = parity[static_cast<std::size_t>(axis)];
    std::copy(f.begin(), f.end(), copy.begin());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::array<int, 3> p{i, j, k};
          p[static_cast<std::size_t>(axis)] = n - 1 - p[static_cast<std::size_t>(axis)];
          const std::size_t s = grid.index(i, j, k);
          f[s] = 0.5 * (copy[s] + sgn * copy[grid.index(p[0], p[1], p[2])]);
        }
  }
}

std::array<double, 3> measure_parity(const RealField& f) {
  const GridSpec& g = f.grid();
  const int n = g.points;
  std::array<double, 3> out{};
  double nn = 0.0;
  for (double v : f.values()) nn += v * v;
  for (int axis = 0; axis < 3; ++axis) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::array<int, 3> p{i, j, k};
          p[static_cast<std::size_t>(axis)] = n - 1 - p[static_cast<std::size_t>(axis)];
          acc += f.at(i, j, k) * f.at(p[0], p[1], p[2]);
        }
    out[static_cast<std::size_t>(axis)] = acc / nn;
  }
  return out;
}

namespace {

// Rotates v to a real vector; aborts if a sizeable imaginary part survives.
RealField make_real(const ComplexField& v) {
  cplx s2{0.0, 0.0};
  for (const auto& x : v.values()) s2 += x * x;
  const cplx phase = std::polar(1.0, -0.5 * std::arg(s2));
  RealField out(v.grid());
  double max_re = 0.0, max_im = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) {
    const cplx x = v[s] * phase;
    out[s] = x.real();
    max_re = std::max(max_re, std::abs(x.real()));
    max_im = std::max(max_im, std::abs(x.imag()));
  }
  if (max_im > 1e-10 * max_re + 1e-300)
    throw NumericalError("threshold eigenvector is not real up to a phase (degenerate mixing?)");
  return out;
}

void normalize_real(RealField& f) {
  double nn = 0.0;
  for (double v : f.values()) nn += v * v;
  const double c = 1.0 / std::sqrt(nn * f.grid().cell_volume());
  for (auto& v : f.values()) v *= c;
}

// Positive lobe towards +x1: first moment along x1 positive, falling back to
// the plain sum for states even in x1.
void fix_sign(RealField& f) {
  const GridSpec& g = f.grid();
  const int n = g.points;
  double m1 = 0.0, m0 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        m1 += g.coord(i) * f.at(i, j, k);
        m0 += f.at(i, j, k);
      }
  const double ref = std::abs(m1) > 1e-8 * std::abs(m0) ? m1 : m0;
  if (ref < 0.0)
    for (auto& v : f.values()) v = -v;
}

struct SectorState {
  double value;
  ComplexField vector;
};

// Lowest eigenvalue of h in the parity sector. Without a hint the bottom of
// the sector is located from below first.
SectorState sector_lowest(const LatticeOperator& h, const Parity& parity, double floor,
                          const std::optional<double>& hint, const std::optional<ComplexField>& start,
                          double tol_res, double offset) {
  EigenOptions eo;
  eo.project = [&](std::span<cplx> f) { project_parity(h.grid(), parity, f); };
  eo.start = start;
  double target;
  if (hint) {
    target = *hint - offset;
  } else {
    eo.tol_res = 1e-4 * spectral_scale(h);
    eo.inner.tol = 1e-8;
    auto coarse = lowest_eigs(h, 1, floor, eo);
    target = coarse.front().value - offset;
    eo.start = coarse.front().vector;
    eo.inner.tol = 1e-12;
  }
  eo.tol_res = tol_res;
  eo.inner.max_iter = 1500;
  auto fine = lowest_eigs(h, 1, target, eo);
  return {fine.front().value, std::move(fine.front().vector)};
}

}  // namespace

ThresholdModel tune_coupling(const PotentialSpec& spec, const GridSpec& grid, const Parity& parity,
                             const TuningOptions& opts) {
  if (!(opts.gamma_lo < opts.gamma_hi)) throw ConfigError("tuning bracket needs gamma_lo < gamma_hi");
  // Offset of the shift below the tracked eigenvalue, a fraction of the
  // lowest box-mode energy so it stays well inside the sector gap.
  const double box_unit = std::pow(std::numbers::pi / (2.0 * grid.extent), 2);
  const double offset = 0.5 * box_unit;
  PotentialSpec work = spec;

  auto eval = [&](double gamma, const std::optional<double>& hint, const std::optional<ComplexField>& start,
                  double tol_res) {
    work.coupling = gamma;
    const RealField v = eval_potential(work, grid);
    const LatticeOperator h = assemble_h0(v);
    double vmin = 0.0;
    for (double x : v.values()) vmin = std::min(vmin, x);
    return sector_lowest(h, parity, vmin, hint, start, tol_res, offset);
  };

  // Scale and tolerance from the upper coupling (largest |V|).
  work.coupling = opts.gamma_hi;
  const double scale_hi = spectral_scale(assemble_h0(eval_potential(work, grid)));
  const double tol_eig = opts.tol_eig > 0.0 ? opts.tol_eig : opts.tol_eig_relative * scale_hi;
  // E error is about residual^2 / gap, so a modest residual suffices for the bracket.
  const double tol_res_search = std::max(1e-9 * scale_hi, std::sqrt(tol_eig * box_unit) * 0.1);

  double glo = opts.gamma_lo, ghi = opts.gamma_hi;
  SectorState slo = eval(glo, std::nullopt, std::nullopt, tol_res_search);
  SectorState shi = eval(ghi, std::nullopt, std::nullopt, tol_res_search);
  double elo = slo.value, ehi = shi.value;
  if (elo * ehi > 0.0) {
    std::ostringstream msg;
    msg << "no sign change of the selected eigenvalue in the coupling bracket [" << glo << ", " << ghi
        << "]: E = " << elo << ", " << ehi;
    throw NumericalError(msg.str());
  }
  double fl = elo, fh = ehi;  // Illinois-weighted values
  int side = 0;
  SectorState best = std::abs(elo) < std::abs(ehi) ? slo : shi;
  double gbest = std::abs(elo) < std::abs(ehi) ? glo : ghi;
  int it = 0;
  for (; it < opts.max_iter && std::abs(best.value) > tol_eig; ++it) {
    double g = (glo * fh - ghi * fl) / (fh - fl);
    if (!(g > glo && g < ghi)) g = 0.5 * (glo + ghi);
    const bool near = std::abs(best.value) < 0.5 * box_unit;
    SectorState st = near ? eval(g, 0.0, best.vector, tol_res_search)
                          : eval(g, std::nullopt, best.vector, tol_res_search);
    if (std::abs(st.value) < std::abs(best.value)) {
      best = st;
      gbest = g;
    }
    if ((st.value > 0.0) == (elo > 0.0)) {
      glo = g;
      elo = st.value;
      fl = st.value;
      if (side == -1) fh *= 0.5;
      side = -1;
    } else {
      ghi = g;
      ehi = st.value;
      fh = st.value;
      if (side == 1) fl *= 0.5;
      side = 1;
    }
    if (ghi - glo < 1e-15 * std::abs(ghi)) break;
  }
  if (std::abs(best.value) > tol_eig) {
    std::ostringstream msg;
    msg << "coupling search stalled at gamma = " << gbest << " with |E| = " << std::abs(best.value) << " > "
        << tol_eig;
    throw NumericalError(msg.str());
  }

  ThresholdModel m;
  m.potential = spec;
  m.potential.coupling = gbest;
  m.v = eval_potential(m.potential, grid);
  const LatticeOperator h0 = assemble_h0(m.v);
  m.scale = spectral_scale(h0);
  m.tol_eig = tol_eig;
  m.tol_res = tol_res_search;
  m.parity = parity;
  m.iterations = it;
  m.psi0 = make_real(best.vector);
  normalize_real(m.psi0);
  fix_sign(m.psi0);
  const ComplexField pc = to_complex(m.psi0);
  const ComplexField hp = h0.apply(pc);
  m.e0 = inner_product(pc, hp).real();
  double rr = 0.0;
  for (std::size_t s = 0; s < hp.size(); ++s) rr += std::norm(hp[s] - m.e0 * pc[s]);
  m.residual = std::sqrt(rr * grid.cell_volume());

  // Full-space neighbours for the simplicity gap.
  EigenOptions eo;
  eo.tol_res = tol_res_search;
  eo.inner.max_iter = 1500;
  auto pairs = lowest_eigs(h0, std::max(2, opts.gap_eigs), m.e0 - offset, eo);
  double best_overlap = 0.0;
  std::size_t self = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double ov = std::abs(inner_product(pc, pairs[i].vector));
    if (ov > best_overlap) {
      best_overlap = ov;
      self = i;
    }
  }
  if (best_overlap < 0.9)
    throw NumericalError("selected state lost its parity signature: no full-space eigenvector matches psi0");
  m.gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i == self) continue;
    m.nearby.push_back(pairs[i].value);
    m.gap = std::min(m.gap, std::abs(pairs[i].value - m.e0));
  }
  const auto par = measure_parity(m.psi0);
  for (int j = 0; j < 3; ++j)
    if (par[static_cast<std::size_t>(j)] * parity[static_cast<std::size_t>(j)] < 0.99)
      throw NumericalError("selected state lost its parity signature");
  return m;
}

void save_model(const ThresholdModel& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "model.txt");
  if (!out) throw ConfigError("cannot write model into " + dir.string());
  out.precision(17);
  out << "potential.family = " << to_string(m.potential.family) << '\n'
      << "potential.width_a_length = " << m.potential.width_a << '\n'
      << "potential.width_b_length = " << m.potential.width_b << '\n'
      << "potential.coupling = " << m.potential.coupling << '\n'
      << "potential.table = " << m.potential.table.string() << '\n'
      << "grid.extent_length = " << m.grid().extent << '\n'
      << "grid.points = " << m.grid().points << '\n'
      << "e0_energy = " << m.e0 << '\n'
      << "residual = " << m.residual << '\n'
      << "tol_res = " << m.tol_res << '\n'
      << "gap_energy = " << m.gap << '\n'
      << "tol_eig_energy = " << m.tol_eig << '\n'
      << "scale_energy = " << m.scale << '\n'
      << "iterations = " << m.iterations << '\n'
      << "parity = " << m.parity[0] << ' ' << m.parity[1] << ' ' << m.parity[2] << '\n'
      << "nearby_energy =";
  for (double e : m.nearby) out << ' ' << e;
  out << '\n';
  write_field(dir / "psi0.bin", m.psi0);
}

ThresholdModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.txt");
  if (!in) throw ConfigError("no model.txt in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("model.txt lacks key " + k);
    return it->second;
  };
  ThresholdModel m;
  m.potential.family = parse_potential_family(get("potential.family"));
  m.potential.width_a = std::stod(get("potential.width_a_length"));
  m.potential.width_b = std::stod(get("potential.width_b_length"));
  m.potential.coupling = std::stod(get("potential.coupling"));
  m.potential.table = get("potential.table");
  const GridSpec grid(std::stod(get("grid.extent_length")), std::stoi(get("grid.points")));
  m.e0 = std::stod(get("e0_energy"));
  m.residual = std::stod(get("residual"));
  m.tol_res = std::stod(get("tol_res"));
  m.gap = std::stod(get("gap_energy"));
  m.tol_eig = std::stod(get("tol_eig_energy"));
  m.scale = std::stod(get("scale_energy"));
  m.iterations = std::stoi(get("iterations"));
  std::istringstream ps(get("parity"));
  ps >> m.parity[0] >> m.parity[1] >> m.parity[2];
  std::istringstream ns(get("nearby_energy"));
  for (double e; ns >> e;) m.nearby.push_back(e);
  m.v = eval_potential(m.potential, grid);
  m.psi0 = read_real_field(dir / "psi0.bin");
  require_same_grid(grid, m.psi0.grid());
  return m;
}

double deflation_shift(const LatticeOperator& h0) { return 10.0 * spectral_scale(h0); }

ReducedResolvent::ReducedResolvent(const ThresholdModel& model, double tol_solve)
    : psi0_(model.psi0),
      h0_(assemble_h0(model.v)),
      sigma_(deflation_shift(h0_)),
      tol_(tol_solve),
      precond_(std::make_shared<DirichletLaplacianInverse>(model.grid(), -1.0)) {
  if (!(tol_solve > 0.0)) throw ConfigError("tol_solve must be > 0");
}

ComplexField ReducedResolvent::apply(const ComplexField& f, SolveStats* stats) const {
  const GridSpec& g = psi0_.grid();
  require_same_grid(g, f.grid());
  const double hv = g.cell_volume();
  const std::size_t N = g.size();
  auto overlap = [&](std::span<const cplx> v) {
    cplx acc{0.0, 0.0};
    for (std::size_t s = 0; s < N; ++s) acc += psi0_[s] * v[s];
    return acc * hv;
  };
  Vec rhs(f.values().begin(), f.values().end());
  const cplx c = overlap(rhs);
  for (std::size_t s = 0; s < N; ++s) rhs[s] -= psi0_[s] * c;
  Vec tmp(N);
  const LinearMap op = [&](std::span<const cplx> x, std::span<cplx> y) {
    const cplx cx = overlap(x);
    for (std::size_t s = 0; s < N; ++s) tmp[s] = x[s] - psi0_[s] * cx;
    h0_.apply(tmp, y);
    const cplx cy = overlap(y);
    for (std::size_t s = 0; s < N; ++s) y[s] += psi0_[s] * (sigma_ * cx - cy);
  };
  Vec u(N, cplx{0.0, 0.0});
  const SolveStats st = minres(op, precond_->as_map(), rhs, u, SolverOptions{tol_, 20000, 60});
  if (stats) *stats = st;
  if (!st.converged) {
    std::ostringstream msg;
    msg << "reduced resolvent: iteration budget exhausted (relative residual " << st.residual << ")";
    throw NumericalError(msg.str());
  }
  const cplx cu = overlap(u);
  for (std::size_t s = 0; s < N; ++s) u[s] -= psi0_[s] * cu;
  return ComplexField(g, std::move(u));
}

double default_tol_c(double b) { return 1e-6 * b * b; }

int classify_nu(const ResonanceCoefficients& coeffs, double tol_c) { return coeffs.c0 > tol_c ? -1 : 1; }

ResonanceCoefficients compute_coefficients(const ThresholdModel& model, const VectorField& a, double tol_solve,
                                           std::optional<double> tol_c) {
  const GridSpec& g = model.grid();
  require_same_grid(g, a.grid());
  if (!(model.gap > 0.0)) throw AssumptionError("degenerate threshold model (gap <= 0)");
  const double hv = g.cell_volume();
  const RealField& psi = model.psi0;
  const int n = g.points;
  ResonanceCoefficients c;

  const LatticeOperator z = assemble_z(a);
  const std::vector<cplx> zd = z.matrix().diagonal_values();
  for (std::size_t s = 0; s < psi.size(); ++s) c.b += psi[s] * psi[s] * zd[s].real();
  c.b *= hv;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double pv = model.psi0.at(i, j, k) * model.v.at(i, j, k);
        c.x[0] += pv * g.coord(i);
        c.x[1] += pv * g.coord(j);
        c.x[2] += pv * g.coord(k);
      }
  for (auto& x : c.x) x *= hv;
  c.c0 = (c.x[0] * c.x[0] + c.x[1] * c.x[1] + c.x[2] * c.x[2]) / (12.0 * std::numbers::pi);

  const ComplexField pc = to_complex(psi);
  const LatticeOperator y = assemble_y(a);
  const ComplexField ypsi = y.apply(pc);
  const ComplexField zpsi = z.apply(pc);
  const ReducedResolvent rr(model, tol_solve);
  SolveStats s1, s2;
  const ComplexField g0y = rr.apply(ypsi, &s1);
  const ComplexField g0z = rr.apply(zpsi, &s2);
  c.max_solve_residual = std::max(s1.residual, s2.residual);
  c.yg0y = inner_product(ypsi, g0y).real();
  c.btil = c.b - c.yg0y;
  // <psi, Y G0 Z psi> + <psi, Z G0 Y psi> - <psi, Y G0 Y G0 Y psi>; the last
  // term is <G0 Y psi, Y G0 Y psi> because G0 is self-adjoint.
  c.alpha_m1 = (inner_product(ypsi, g0z) + inner_product(zpsi, g0y) - inner_product(g0y, y.apply(g0y))).real();
  c.beta_m1 = c.b * c.c0 * (c.b - 2.0 * c.yg0y);
  c.tol_c = tol_c.value_or(default_tol_c(c.b));
  c.nu = classify_nu(c, c.tol_c);
  c.b_minus_2yg0y_positive = c.b - 2.0 * c.yg0y > 0.0;
  c.btil_positive = c.btil > 0.0;
  return c;
}

}  // namespace mtr
