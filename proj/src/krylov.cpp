#include "mtr/krylov.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

namespace mtr {

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm2(std::span<const cplx> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(cplx alpha, std::span<cplx> x) {
  for (auto& v : x) v *= alpha;
}

namespace {

double residual_norm(const LinearMap& a, std::span<const cplx> b, std::span<const cplx> x, Vec& r) {
  a(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

}  // namespace

SolveStats gmres(const LinearMap& a, const LinearMap& precond, std::span<const cplx> b, std::span<cplx> x,
                 const SolverOptions& opts) {
  const std::size_t N = b.size();
  const int m = std::max(1, opts.restart);
  SolveStats stats;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), cplx{0.0, 0.0});
    stats.converged = true;
    return stats;
  }
  Vec r(N), w(N), tmp(N);
  std::vector<Vec> V(static_cast<std::size_t>(m) + 1, Vec(N));
  std::vector<std::vector<cplx>> H(static_cast<std::size_t>(m) + 1, std::vector<cplx>(static_cast<std::size_t>(m)));
  std::vector<double> cs(static_cast<std::size_t>(m));
  std::vector<cplx> sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m) + 1);

  double beta = residual_norm(a, b, x, r);
  stats.residual = beta / bnorm;
  while (stats.residual > opts.tol && stats.iterations < opts.max_iter) {
    for (std::size_t i = 0; i < N; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), cplx{0.0, 0.0});
    g[0] = beta;
    int k = 0;
    for (; k < m && stats.iterations < opts.max_iter; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      ++stats.iterations;
      precond(V[uk], tmp);
      a(tmp, w);
      for (std::size_t i = 0; i <= uk; ++i) {
        H[i][uk] = dot(V[i], w);
        axpy(-H[i][uk], V[i], w);
      }
      const double hn = norm2(w);
      H[uk + 1][uk] = hn;
      if (hn > 0.0)
        for (std::size_t i = 0; i < N; ++i) V[uk + 1][i] = w[i] / hn;
      for (std::size_t i = 0; i < uk; ++i) {
        const cplx t = cs[i] * H[i][uk] + sn[i] * H[i + 1][uk];
        H[i + 1][uk] = -std::conj(sn[i]) * H[i][uk] + cs[i] * H[i + 1][uk];
        H[i][uk] = t;
      }
      const cplx hk = H[uk][uk];
      const double hk1 = std::abs(H[uk + 1][uk]);
      const double t = std::hypot(std::abs(hk), hk1);
      if (std::abs(hk) == 0.0) {
        cs[uk] = 0.0;
        sn[uk] = 1.0;
      } else {
        cs[uk] = std::abs(hk) / t;
        sn[uk] = (hk / std::abs(hk)) * std::conj(H[uk + 1][uk]) / t;
      }
      H[uk][uk] = cs[uk] * hk + sn[uk] * H[uk + 1][uk];
      H[uk + 1][uk] = 0.0;
      g[uk + 1] = -std::conj(sn[uk]) * g[uk];
      g[uk] = cs[uk] * g[uk];
      if (std::abs(g[uk + 1]) / bnorm < 0.5 * opts.tol || hn == 0.0) {
        ++k;
        break;
      }
    }
    std::vector<cplx> y(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      cplx s = g[ui];
      for (std::size_t j = ui + 1; j < static_cast<std::size_t>(k); ++j) s -= H[ui][j] * y[j];
      y[ui] = s / H[ui][ui];
    }
    std::fill(w.begin(), w.end(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < y.size(); ++i) axpy(y[i], V[i], w);
    precond(w, tmp);
    axpy(1.0, tmp, x);
    beta = residual_norm(a, b, x, r);
    stats.residual = beta / bnorm;
  }
  stats.converged = stats.residual <= opts.tol;
  return stats;
}

SolveStats minres(const LinearMap& a, const LinearMap& precond, std::span<const cplx> b, std::span<cplx> x,
                  const SolverOptions& opts) {
  const std::size_t N = b.size();
  SolveStats stats;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), cplx{0.0, 0.0});
    stats.converged = true;
    return stats;
  }
  Vec r0(N), r1(N), r2(N), y(N), v(N), w(N), w1(N), w2(N), dx(N);
  stats.residual = residual_norm(a, b, x, r0) / bnorm;
  // Outer loop restarts from the true residual if the recurrence drifts.
  for (int cycle = 0; cycle < 8 && stats.residual > opts.tol && stats.iterations < opts.max_iter; ++cycle) {
    r1 = r0;
    precond(r1, y);
    double beta1 = dot(r1, y).real();
    if (!(beta1 > 0.0)) throw NumericalError("MINRES: preconditioner is not positive definite");
    beta1 = std::sqrt(beta1);
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;
    std::fill(w.begin(), w.end(), cplx{0.0, 0.0});
    std::fill(w2.begin(), w2.end(), cplx{0.0, 0.0});
    std::fill(dx.begin(), dx.end(), cplx{0.0, 0.0});
    r2 = r1;
    const double target = 0.3 * opts.tol * beta1 * bnorm / norm2(r0);
    for (int itn = 1; stats.iterations < opts.max_iter; ++itn) {
      ++stats.iterations;
      const double s = 1.0 / beta;
      for (std::size_t i = 0; i < N; ++i) v[i] = s * y[i];
      a(v, y);
      if (itn >= 2) axpy(-beta / oldb, r1, y);
      const double alfa = dot(v, y).real();
      axpy(-alfa / beta, r2, y);
      std::swap(r1, r2);
      r2 = y;
      precond(r2, y);
      oldb = beta;
      const double bb = dot(r2, y).real();
      if (bb < 0.0) throw NumericalError("MINRES: preconditioner is not positive definite");
      beta = std::sqrt(bb);
      const double oldeps = epsln;
      const double delta = cs * dbar + sn * alfa;
      const double gbar = sn * dbar - cs * alfa;
      epsln = sn * beta;
      dbar = -cs * beta;
      const double gamma = std::max(std::hypot(gbar, beta), std::numeric_limits<double>::min());
      cs = gbar / gamma;
      sn = beta / gamma;
      const double phi = cs * phibar;
      phibar = sn * phibar;
      std::swap(w1, w2);  // w1 <- old w2
      std::swap(w2, w);   // w2 <- old w
      for (std::size_t i = 0; i < N; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
      axpy(phi, w, dx);
      if (phibar < target || beta == 0.0) break;
    }
    axpy(1.0, dx, x);
    stats.residual = residual_norm(a, b, x, r0) / bnorm;
  }
  stats.converged = stats.residual <= opts.tol;
  return stats;
}

struct DirichletLaplacianInverse::Plan {
  fftw_plan plan = nullptr;
};

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

double DirichletLaplacianInverse::laplacian_eigenvalue(const GridSpec& grid, int p, int q, int r) {
  const double h = grid.spacing;
  const double c = std::numbers::pi / (2.0 * (grid.points + 1));
  auto mode = [&](int m) {
    const double s = std::sin(c * m);
    return 4.0 / (h * h) * s * s;
  };
  return mode(p) + mode(q) + mode(r);
}

DirichletLaplacianInverse::DirichletLaplacianInverse(const GridSpec& grid, cplx shift)
    : grid_(grid), shift_(shift), plan_(std::make_unique<Plan>()) {
  const int n = grid.points;
  std::vector<double> lam(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) lam[static_cast<std::size_t>(p)] = laplacian_eigenvalue(grid, p + 1, 0, 0);
  const double norm = std::pow(2.0 * (n + 1), 3);
  inv_symbol_.resize(grid.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const cplx d = lam[static_cast<std::size_t>(i)] + lam[static_cast<std::size_t>(j)] +
                       lam[static_cast<std::size_t>(k)] - shift;
        if (std::abs(d) == 0.0) throw NumericalError("Laplacian preconditioner shift hits an eigenvalue");
        inv_symbol_[grid.index(i, j, k)] = 1.0 / (d * norm);
      }
  std::vector<double> buf(grid.size());
  std::lock_guard lock(fftw_planner_mutex());
  plan_->plan = fftw_plan_r2r_3d(n, n, n, buf.data(), buf.data(), FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_->plan) throw NumericalError("FFTW planning failed");
}

DirichletLaplacianInverse::~DirichletLaplacianInverse() {
  std::lock_guard lock(fftw_planner_mutex());
  if (plan_ && plan_->plan) fftw_destroy_plan(plan_->plan);
}

void DirichletLaplacianInverse::apply(std::span<const cplx> x, std::span<cplx> y) const {
  const std::size_t N = grid_.size();
  std::vector<double> re(N), im(N);
  for (std::size_t s = 0; s < N; ++s) {
    re[s] = x[s].real();
    im[s] = x[s].imag();
  }
  fftw_execute_r2r(plan_->plan, re.data(), re.data());
  fftw_execute_r2r(plan_->plan, im.data(), im.data());
  for (std::size_t s = 0; s < N; ++s) {
    const cplx c = cplx(re[s], im[s]) * inv_symbol_[s];
    re[s] = c.real();
    im[s] = c.imag();
  }
  fftw_execute_r2r(plan_->plan, re.data(), re.data());
  fftw_execute_r2r(plan_->plan, im.data(), im.data());
  for (std::size_t s = 0; s < N; ++s) y[s] = cplx(re[s], im[s]);
}

LinearMap DirichletLaplacianInverse::as_map() const {
  return [this](std::span<const cplx> x, std::span<cplx> y) { apply(x, y); };
}

}  // namespace mtr
