#include "mtr/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mtr {

CsrMatrix::CsrMatrix(std::size_t rows, std::vector<std::size_t> row_ptr, std::vector<std::int32_t> cols,
                     std::vector<cplx> vals)
    : rows_(rows), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.back() != cols_.size() || cols_.size() != vals_.size())
    throw std::invalid_argument("inconsistent CSR arrays");
}

CsrMatrix CsrMatrix::diagonal(std::span<const cplx> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> rp(n + 1);
  std::vector<std::int32_t> c(n);
  for (std::size_t i = 0; i <= n; ++i) rp[i] = i;
  for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<std::int32_t>(i);
  return CsrMatrix(n, std::move(rp), std::move(c), std::vector<cplx>(d.begin(), d.end()));
}

void CsrMatrix::apply(std::span<const cplx> x, std::span<cplx> y) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    cplx acc{0.0, 0.0};
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) acc += vals_[p] * x[static_cast<std::size_t>(cols_[p])];
    y[r] = acc;
  }
}

void CsrMatrix::apply_adjoint(std::span<const cplx> x, std::span<cplx> y) const {
  std::fill(y.begin(), y.end(), cplx{0.0, 0.0});
  for (std::size_t r = 0; r < rows_; ++r) {
    const cplx xr = x[r];
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      y[static_cast<std::size_t>(cols_[p])] += std::conj(vals_[p]) * xr;
  }
}

CsrMatrix::cplx CsrMatrix::entry(std::size_t r, std::size_t c) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(c));
  if (it == last || *it != static_cast<std::int32_t>(c)) return {0.0, 0.0};
  return vals_[static_cast<std::size_t>(it - cols_.begin())];
}

std::vector<CsrMatrix::cplx> CsrMatrix::diagonal_values() const {
  std::vector<cplx> d(rows_);
  for (std::size_t r = 0; r < rows_; ++r) d[r] = entry(r, r);
  return d;
}

CsrMatrix CsrMatrix::conjugate() const {
  CsrMatrix out = *this;
  for (auto& v : out.vals_) v = std::conj(v);
  return out;
}

double CsrMatrix::hermitian_defect() const {
  double defect = 0.0, scale = 0.0;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const auto c = static_cast<std::size_t>(cols_[p]);
      defect = std::max(defect, std::abs(vals_[p] - std::conj(entry(c, r))));
      scale = std::max(scale, std::abs(vals_[p]));
    }
  return scale > 0.0 ? defect / scale : defect;
}

double CsrMatrix::gershgorin_radius() const {
  double m = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += std::abs(vals_[p]);
    m = std::max(m, s);
  }
  return m;
}

std::pair<double, double> CsrMatrix::gershgorin_interval() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t r = 0; r < rows_; ++r) {
    double d = 0.0, off = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (static_cast<std::size_t>(cols_[p]) == r)
        d = vals_[p].real();
      else
        off += std::abs(vals_[p]);
    }
    lo = std::min(lo, d - off);
    hi = std::max(hi, d + off);
  }
  return {lo, hi};
}

bool CsrMatrix::same_structure(const CsrMatrix& other) const {
  return rows_ == other.rows_ && row_ptr_ == other.row_ptr_ && cols_ == other.cols_;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, std::complex<double> alpha, std::complex<double> beta) {
  if (a.rows() != b.rows()) throw std::invalid_argument("CSR add: row count mismatch");
  const std::size_t n = a.rows();
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<std::int32_t> cols;
  std::vector<std::complex<double>> vals;
  cols.reserve(a.nonzeros() + b.nonzeros());
  vals.reserve(a.nonzeros() + b.nonzeros());
  const auto& ap = a.row_ptr();
  const auto& bp = b.row_ptr();
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t i = ap[r], j = bp[r];
    while (i < ap[r + 1] || j < bp[r + 1]) {
      const bool take_a = j >= bp[r + 1] || (i < ap[r + 1] && a.cols()[i] <= b.cols()[j]);
      const bool take_b = i >= ap[r + 1] || (j < bp[r + 1] && b.cols()[j] <= a.cols()[i]);
      std::complex<double> v{0.0, 0.0};
      std::int32_t c = 0;
      if (take_a) {
        v += alpha * a.vals()[i];
        c = a.cols()[i++];
      }
      if (take_b) {
        v += beta * b.vals()[j];
        c = b.cols()[j++];
      }
      cols.push_back(c);
      vals.push_back(v);
    }
    rp[r + 1] = cols.size();
  }
  return CsrMatrix(n, std::move(rp), std::move(cols), std::move(vals));
}

}  // namespace mtr
