#include "impdiff/linalg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impdiff/errors.hpp"

namespace impdiff::linalg {

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw StructuralError("DenseMatrix: ragged initializer");
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void DenseMatrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw StructuralError("set_column: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) throw StructuralError("multiply: dimension mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += (*this)(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> DenseMatrix::multiply_transposed(std::span<const double> x) const {
  if (x.size() != rows_) throw StructuralError("multiply_transposed: dimension mismatch");
  std::vector<double> y(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) y[c] += (*this)(r, c) * x[r];
  }
  return y;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols_ != b.rows_) throw StructuralError("matrix product: dimension mismatch");
  DenseMatrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) {
    throw StructuralError("matrix sum: dimension mismatch");
  }
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.entries_.size(); ++i) c.entries_[i] += b.entries_[i];
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  return a + (-1.0) * b;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (double& v : c.entries_) v *= s;
  return c;
}

LuFactors lu_factor(DenseMatrix m) {
  if (!m.square()) {
    throw StructuralError("lu_factor: matrix is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", not square");
  }
  const std::size_t n = m.rows();
  LuFactors f;
  f.permutation.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.permutation[i] = i;
  const double threshold = kSingularPivotRatio * m.max_abs();
  if (n > 0 && m.max_abs() == 0.0) f.singular = true;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(m(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(m(r, k)) > best) {
        best = std::abs(m(r, k));
        p = r;
      }
    }
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(p, c));
      std::swap(f.permutation[k], f.permutation[p]);
    }
    if (best <= threshold || best == 0.0) {
      f.singular = true;
      continue;
    }
    const double pivot = m(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double l = m(r, k) / pivot;
      m(r, k) = l;
      if (l == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) m(r, c) -= l * m(k, c);
    }
  }
  f.packed = std::move(m);
  return f;
}

std::vector<double> lu_solve(const LuFactors& f, std::span<const double> b,
                             Transpose transpose) {
  const std::size_t n = f.packed.rows();
  if (b.size() != n) {
    throw StructuralError("lu_solve: right-hand side has length " +
                          std::to_string(b.size()) + ", expected " + std::to_string(n));
  }
  if (f.singular) throw SingularSystemError("lu_solve: matrix is singular");
  const DenseMatrix& lu = f.packed;
  std::vector<double> x(n);
  if (transpose == Transpose::no) {
    // L z = P b, then U x = z.
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b[f.permutation[i]];
      for (std::size_t j = 0; j < i; ++j) acc -= lu(i, j) * x[j];
      x[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = x[i];
      for (std::size_t j = i + 1; j < n; ++j) acc -= lu(i, j) * x[j];
      x[i] = acc / lu(i, i);
    }
    return x;
  }
  // Aᵀ = Uᵀ Lᵀ P: Uᵀ w = b, Lᵀ z = w, x = Pᵀ z.
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < i; ++j) acc -= lu(j, i) * w[j];
    w[i] = acc / lu(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = w[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= lu(j, i) * w[j];
    w[i] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) x[f.permutation[i]] = w[i];
  return x;
}

DenseMatrix reconstruct(const LuFactors& f) {
  const std::size_t n = f.packed.rows();
  DenseMatrix l = DenseMatrix::identity(n);
  DenseMatrix u(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j < i) {
        l(i, j) = f.packed(i, j);
      } else {
        u(i, j) = f.packed(i, j);
      }
    }
  }
  const DenseMatrix pa = l * u;
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(f.permutation[i], j) = pa(i, j);
  }
  return a;
}

namespace {

bool is_identity(const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) != (i == j ? 1.0 : 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<double> block_bidiagonal_solve(std::span<const DenseMatrix> diag,
                                           std::span<const DenseMatrix> off,
                                           std::span<const double> rhs) {
  const std::size_t blocks = diag.size();
  if (blocks == 0) {
    if (!rhs.empty() || !off.empty()) {
      throw StructuralError("block_bidiagonal_solve: empty diagonal with nonempty data");
    }
    return {};
  }
  const std::size_t n = diag[0].rows();
  if (off.size() + 1 != blocks) {
    throw StructuralError("block_bidiagonal_solve: need one fewer off-diagonal block (" +
                          std::to_string(off.size()) + " given for " +
                          std::to_string(blocks) + " diagonal blocks)");
  }
  if (rhs.size() != blocks * n) {
    throw StructuralError("block_bidiagonal_solve: right-hand side length mismatch");
  }
  for (const auto& d : diag) {
    if (d.rows() != n || d.cols() != n) {
      throw StructuralError("block_bidiagonal_solve: diagonal block size mismatch");
    }
  }
  for (const auto& o : off) {
    if (o.rows() != n || o.cols() != n) {
      throw StructuralError("block_bidiagonal_solve: off-diagonal block size mismatch");
    }
  }

  std::vector<double> x(rhs.begin(), rhs.end());
  for (std::size_t i = blocks; i-- > 0;) {
    std::span<double> xi(x.data() + i * n, n);
    if (i + 1 < blocks) {
      const auto coupling =
          off[i].multiply(std::span<const double>(x.data() + (i + 1) * n, n));
      for (std::size_t k = 0; k < n; ++k) xi[k] -= coupling[k];
    }
    if (!is_identity(diag[i])) {
      const auto solved = lu_solve(lu_factor(diag[i]), xi);
      std::copy(solved.begin(), solved.end(), xi.begin());
    }
  }
  return x;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StructuralError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace impdiff::linalg
