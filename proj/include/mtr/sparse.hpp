#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mtr {

/// Compressed sparse row matrix with complex entries. Column indices within
/// a row are strictly increasing.
class CsrMatrix {
 public:
  using cplx = std::complex<double>;

  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::vector<std::size_t> row_ptr, std::vector<std::int32_t> cols,
            std::vector<cplx> vals);

  static CsrMatrix diagonal(std::span<const cplx> d);

  std::size_t rows() const { return rows_; }
  std::size_t nonzeros() const { return vals_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int32_t>& cols() const { return cols_; }
  const std::vector<cplx>& vals() const { return vals_; }

  /// y = A x
  void apply(std::span<const cplx> x, std::span<cplx> y) const;
  /// y = A^H x
  void apply_adjoint(std::span<const cplx> x, std::span<cplx> y) const;

  cplx entry(std::size_t r, std::size_t c) const;
  std::vector<cplx> diagonal_values() const;

  /// Entrywise complex conjugate.
  CsrMatrix conjugate() const;
  /// max |A_rc - conj(A_cr)| over stored entries, relative to max |A_rc|.
  double hermitian_defect() const;
  /// Gershgorin bound on the spectral radius.
  double gershgorin_radius() const;
  /// Interval [lo, hi] enclosing the real parts of all eigenvalues.
  std::pair<double, double> gershgorin_interval() const;

  bool same_structure(const CsrMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::int32_t> cols_;
  std::vector<cplx> vals_;
};

/// alpha * a + beta * b, merging sparsity patterns.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, std::complex<double> alpha = 1.0,
              std::complex<double> beta = 1.0);

}  // namespace mtr
