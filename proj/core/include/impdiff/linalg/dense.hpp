#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace impdiff::linalg {

/// Row-major dense real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {entries_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {entries_.data() + r * cols_, cols_};
  }
  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  std::span<const double> entries() const noexcept { return entries_; }

  /// A·x
  std::vector<double> multiply(std::span<const double> x) const;
  /// Aᵀ·x
  std::vector<double> multiply_transposed(std::span<const double> x) const;

  DenseMatrix transposed() const;
  double max_abs() const;

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
  friend DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
  friend DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
  friend DenseMatrix operator*(double s, const DenseMatrix& a);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// PA = LU with partial pivoting. `packed` stores L strictly below the
/// diagonal (unit diagonal implied) and U on and above it; `permutation[i]` is
/// the row of A that ended up in row i.
struct LuFactors {
  DenseMatrix packed;
  std::vector<std::size_t> permutation;
  bool singular = false;
};

/// Pivots below this fraction of the largest input entry mark the matrix
/// singular.
inline constexpr double kSingularPivotRatio = 1e-14;

enum class Transpose : bool { no = false, yes = true };

LuFactors lu_factor(DenseMatrix m);

/// Solves A x = b, or Aᵀ x = b with Transpose::yes. Throws SingularSystemError
/// when the factors are flagged singular.
std::vector<double> lu_solve(const LuFactors& f, std::span<const double> b,
                             Transpose transpose = Transpose::no);

/// Rebuilds A from its factors (PᵀLU).
DenseMatrix reconstruct(const LuFactors& f);

/// Solves the upper block-bidiagonal system
///
///   D_i γ_i + U_i γ_{i+1} = r_i   (i < n-1),   D_{n-1} γ_{n-1} = r_{n-1}
///
/// by backward recursion. `diag` holds n blocks of size N×N, `off` holds n-1
/// blocks, `rhs` has length n·N. Unit (identity) diagonal blocks skip the
/// per-block solve.
std::vector<double> block_bidiagonal_solve(std::span<const DenseMatrix> diag,
                                           std::span<const DenseMatrix> off,
                                           std::span<const double> rhs);

double norm_inf(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace impdiff::linalg
