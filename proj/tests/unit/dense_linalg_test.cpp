#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "impdiff/errors.hpp"
#include "impdiff/linalg/dense.hpp"
#include "support/oracles.hpp"

namespace impdiff {
namespace {

using linalg::DenseMatrix;
using linalg::Transpose;

DenseMatrix random_well_conditioned(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = dist(rng);
    m(i, i) += static_cast<double>(n);
  }
  return m;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double frobenius(const DenseMatrix& m) { return norm2(m.entries()); }

TEST(LuFactor, IdentityHasTrivialPivots) {
  const auto f = linalg::lu_factor(DenseMatrix::identity(3));
  EXPECT_FALSE(f.singular);
  EXPECT_EQ(f.permutation, (std::vector<std::size_t>{0, 1, 2}));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(f.packed(i, j), i == j ? 1.0 : 0.0);
  }
}

TEST(LuFactor, PermutationHandlesZeroPivot) {
  const DenseMatrix p{{0.0, 1.0}, {1.0, 0.0}};
  const auto f = linalg::lu_factor(p);
  EXPECT_FALSE(f.singular);
  EXPECT_EQ(f.permutation, (std::vector<std::size_t>{1, 0}));
  const auto x = linalg::lu_solve(f, std::vector<double>{3.0, 5.0});
  EXPECT_EQ(x, (std::vector<double>{5.0, 3.0}));
}

TEST(LuFactor, ReconstructsInput) {
  const DenseMatrix a{{2.0, 1.0}, {1.0, 3.0}};
  const auto back = linalg::reconstruct(linalg::lu_factor(a));
  EXPECT_LE(frobenius(back - a), 1e-12 * frobenius(a));

  std::mt19937_64 rng(3);
  for (std::size_t n : {1U, 4U, 17U, 64U}) {
    const auto m = random_well_conditioned(rng, n);
    const auto r = linalg::reconstruct(linalg::lu_factor(m));
    EXPECT_LE(frobenius(r - m), 1e-12 * frobenius(m)) << "n=" << n;
  }
}

TEST(LuFactor, NonSquareIsStructuralError) {
  EXPECT_THROW(linalg::lu_factor(DenseMatrix(2, 3)), StructuralError);
}

TEST(LuFactor, SingularMatricesAreFlagged) {
  EXPECT_TRUE(linalg::lu_factor(DenseMatrix(2, 2)).singular);
  EXPECT_TRUE(linalg::lu_factor(DenseMatrix{{1.0, 2.0}, {2.0, 4.0}}).singular);
  EXPECT_TRUE(linalg::lu_factor(DenseMatrix{{1.0, 0.0}, {0.0, 1e-15}}).singular);
  EXPECT_FALSE(linalg::lu_factor(DenseMatrix{{1.0, 0.0}, {0.0, 1e-13}}).singular);
  const auto f = linalg::lu_factor(DenseMatrix{{0.0}});
  EXPECT_THROW(linalg::lu_solve(f, std::vector<double>{1.0}), SingularSystemError);
}

TEST(LuSolve, KnownSystems) {
  const std::vector<double> b{0.5, -2.0, 7.0};
  EXPECT_EQ(linalg::lu_solve(linalg::lu_factor(DenseMatrix::identity(3)), b), b);

  const DenseMatrix d{{2.0, 0.0}, {0.0, 4.0}};
  EXPECT_EQ(linalg::lu_solve(linalg::lu_factor(d), std::vector<double>{2.0, 4.0}),
            (std::vector<double>{1.0, 1.0}));

  const DenseMatrix u{{1.0, 2.0}, {0.0, 1.0}};
  const std::vector<double> rhs{1.0, 1.0};
  const auto xt = linalg::lu_solve(linalg::lu_factor(u), rhs, Transpose::yes);
  const auto back = u.multiply_transposed(xt);
  EXPECT_NEAR(back[0], 1.0, 1e-15);
  EXPECT_NEAR(back[1], 1.0, 1e-15);
}

TEST(LuSolve, DimensionMismatchThrows) {
  const auto f = linalg::lu_factor(DenseMatrix::identity(2));
  EXPECT_THROW(linalg::lu_solve(f, std::vector<double>{1.0}), StructuralError);
}

TEST(LuSolve, ResidualBoundOnRandomMatrices) {
  std::mt19937_64 rng(99);
  for (std::size_t n = 1; n <= 64; n += 7) {
    const auto a = random_well_conditioned(rng, n);
    const auto b = testing::uniform_vector(rng, n);
    const auto f = linalg::lu_factor(a);
    for (auto tr : {Transpose::no, Transpose::yes}) {
      const auto x = linalg::lu_solve(f, b, tr);
      const auto ax = tr == Transpose::no ? a.multiply(x) : a.multiply_transposed(x);
      std::vector<double> r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = ax[i] - b[i];
      EXPECT_LE(norm2(r), 1e-10 * (frobenius(a) * norm2(x) + norm2(b))) << "n=" << n;
    }
  }
}

DenseMatrix assemble_block_bidiagonal(const std::vector<DenseMatrix>& diag,
                                      const std::vector<DenseMatrix>& off) {
  const std::size_t blocks = diag.size();
  const std::size_t n = diag[0].rows();
  DenseMatrix m(blocks * n, blocks * n);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        m(b * n + i, b * n + j) = diag[b](i, j);
        if (b + 1 < blocks) m(b * n + i, (b + 1) * n + j) = off[b](i, j);
      }
    }
  }
  return m;
}

TEST(BlockBidiagonal, ZeroCouplingReturnsRhs) {
  const std::vector<DenseMatrix> diag(3, DenseMatrix::identity(2));
  const std::vector<DenseMatrix> off(2, DenseMatrix(2, 2));
  const std::vector<double> rhs{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(linalg::block_bidiagonal_solve(diag, off, rhs), rhs);
}

TEST(BlockBidiagonal, ScalarChainMatchesDenseSolve) {
  const std::vector<DenseMatrix> diag(3, DenseMatrix::identity(1));
  const std::vector<DenseMatrix> off(2, DenseMatrix{{-2.0}});
  const std::vector<double> rhs{0.0, 0.0, 1.0};
  const auto gamma = linalg::block_bidiagonal_solve(diag, off, rhs);
  const auto dense =
      linalg::lu_solve(linalg::lu_factor(assemble_block_bidiagonal(diag, off)), rhs);
  EXPECT_EQ(gamma, (std::vector<double>{4.0, 2.0, 1.0}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(gamma[i], dense[i], 1e-12);
}

TEST(BlockBidiagonal, RandomInstancesMatchDenseSolve) {
  std::mt19937_64 rng(5);
  for (std::size_t blocks = 1; blocks <= 16; blocks += 3) {
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<DenseMatrix> diag(blocks, DenseMatrix::identity(n));
      std::vector<DenseMatrix> off;
      for (std::size_t b = 0; b + 1 < blocks; ++b) {
        DenseMatrix o(n, n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) o(i, j) = testing::uniform_vector(rng, 1)[0];
        }
        off.push_back(o);
      }
      // One general diagonal block exercises the per-block solve.
      if (blocks > 2) diag[1] = random_well_conditioned(rng, n);
      const auto rhs = testing::uniform_vector(rng, blocks * n);
      const auto x = linalg::block_bidiagonal_solve(diag, off, rhs);
      const auto ref =
          linalg::lu_solve(linalg::lu_factor(assemble_block_bidiagonal(diag, off)), rhs);
      EXPECT_LE(testing::max_rel_err(x, ref), 1e-12) << blocks << "x" << n;
    }
  }
}

TEST(BlockBidiagonal, DimensionMismatch) {
  const std::vector<DenseMatrix> diag(3, DenseMatrix::identity(2));
  const std::vector<DenseMatrix> off(1, DenseMatrix(2, 2));
  EXPECT_THROW(linalg::block_bidiagonal_solve(diag, off, std::vector<double>(6)),
               StructuralError);
  const std::vector<DenseMatrix> off2(2, DenseMatrix(2, 2));
  EXPECT_THROW(linalg::block_bidiagonal_solve(diag, off2, std::vector<double>(5)),
               StructuralError);
}

}  // namespace
}  // namespace impdiff
