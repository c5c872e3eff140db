#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "linalg_properties.hpp"
#include "oracles.hpp"
#include "sdae/linalg.hpp"
#include "sdae/problem.hpp"

using sdae::Matrix;
using sdae::Vector;

TEST(Matrix, BasicArithmetic) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{0, 1}, {1, 0}};
  EXPECT_EQ(a * b, (Matrix{{2, 1}, {4, 3}}));
  EXPECT_EQ(a + b, (Matrix{{1, 3}, {4, 4}}));
  EXPECT_EQ(a - b, (Matrix{{1, 1}, {2, 4}}));
  EXPECT_EQ(a * 2.0, (Matrix{{2, 4}, {6, 8}}));
  EXPECT_EQ(a.transposed(), (Matrix{{1, 3}, {2, 4}}));
  const Vector x{1, -1};
  EXPECT_EQ(a * x, (Vector{-1, -1}));
}

TEST(Matrix, Norms) {
  const Matrix a{{3, 0}, {0, 4}};
  EXPECT_DOUBLE_EQ(sdae::frobenius_norm(a), 5.0);
  const Vector v{3, -4};
  EXPECT_DOUBLE_EQ(sdae::norm2(v), 5.0);
  EXPECT_DOUBLE_EQ(sdae::norm_inf(v), 4.0);
  const Vector huge{1e200, 1e200};
  EXPECT_NEAR(sdae::norm2(huge) / 1e200, std::numbers::sqrt2, 1e-15);
}

TEST(Svd, SingularValuesMatchEigenvaluesOfGram) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + trial % 5;
    const std::size_t r = static_cast<std::size_t>(trial) % (d + 1);
    const Matrix a = props::random_rank_matrix(rng, d, r);
    const sdae::SvdFactors f = sdae::svd(a);
    // Squared: Gram eigenvalues carry absolute error eps |A|^2.
    Vector ev = oracle::symmetric_eigenvalues(oracle::mul(oracle::transpose(a), a));
    std::sort(ev.rbegin(), ev.rend());
    const double smax = std::max(1.0, std::sqrt(ev[0]));
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_NEAR(f.singular_values[i] * f.singular_values[i], ev[i], 1e-10 * smax * smax);
    }
    EXPECT_EQ(f.rank, r);
    // Reconstruction and orthogonality.
    Matrix recon = oracle::mul(oracle::mul(f.left, Matrix::diagonal(f.singular_values)), f.right);
    EXPECT_LT(oracle::max_abs_diff(recon, a), 1e-12 * smax * d);
    EXPECT_LT(oracle::max_abs_diff(oracle::mul(oracle::transpose(f.left), f.left), Matrix::identity(d)), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(oracle::mul(f.right, oracle::transpose(f.right)), Matrix::identity(d)), 1e-12);
  }
}

TEST(Pinv, MatchesFullRankFactorizationFormula) {
  // For A = B C with full column rank B and full row rank C:
  // A^- = C^T (C C^T)^{-1} (B^T B)^{-1} B^T.
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + trial % 4;
    const std::size_t r = 1 + static_cast<std::size_t>(trial) % d;
    const Matrix b = oracle::random_matrix(rng, d, r);
    const Matrix c = oracle::random_matrix(rng, r, d);
    const Matrix a = oracle::mul(b, c);
    const Matrix expected =
        oracle::mul(oracle::mul(oracle::transpose(c), oracle::inverse(oracle::mul(c, oracle::transpose(c)))),
                    oracle::mul(oracle::inverse(oracle::mul(oracle::transpose(b), b)), oracle::transpose(b)));
    const Matrix got = sdae::projectors(a).a_pinv;
    EXPECT_LT(oracle::max_abs_diff(got, expected), 1e-8 * (1.0 + sdae::frobenius_norm(expected)))
        << "d=" << d << " r=" << r;
  }
}

TEST(Pinv, ZeroMatrixHasZeroPseudoInverse) {
  const sdae::ProjectorBundle b = sdae::projectors(Matrix(3, 3));
  EXPECT_EQ(b.rank, 0u);
  EXPECT_EQ(b.a_pinv, Matrix(3, 3));
  EXPECT_EQ(b.q, Matrix::identity(3));
  EXPECT_EQ(b.kernel_basis.cols(), 3u);
}

TEST(Projectors, PropertySuiteOnRandomMatrices) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial) % 5;
    const std::size_t r = static_cast<std::size_t>(trial / 5) % (d + 1);
    const Matrix a = props::random_rank_matrix(rng, d, r);
    const props::Defects def = props::defects(a);
    ASSERT_LE(def.penrose, 1e-10) << "trial " << trial;
    ASSERT_LE(def.projector, 1e-10) << "trial " << trial;
    ASSERT_EQ(def.rank, r);
  }
}

TEST(Projectors, RankOneLeadingMatrixOfExample51) {
  const sdae::SdaeProblem p = sdae::builtin("example51");
  const double s = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < 50; ++i) {
    const double t = i / 49.0;
    const double tau = t * t + 1.0;
    const sdae::ProjectorBundle b = sdae::projectors(p.a_of_t(t));
    EXPECT_EQ(b.rank, 1u);
    // Hand-derived from A = tau e2 (-s, s).
    EXPECT_LT(oracle::max_abs_diff(b.a_pinv, Matrix{{0, -s / tau}, {0, s / tau}}), 1e-14);
    EXPECT_LT(oracle::max_abs_diff(b.p, Matrix{{0.5, -0.5}, {-0.5, 0.5}}), 1e-14);
    EXPECT_LT(oracle::max_abs_diff(b.r_proj, Matrix{{1, 0}, {0, 0}}), 1e-14);
    EXPECT_LE(props::defects(b.a).penrose, 1e-10);
  }
}

TEST(SolveLinear, MatchesCramer) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial) % 5;
    const Matrix a = oracle::random_matrix(rng, d, d);
    Vector b(d);
    std::normal_distribution<double> n01;
    for (double& v : b) v = n01(rng);
    const Vector x = sdae::solve_linear(a, b);
    const Vector y = oracle::cramer_solve(a, b);
    const double cond_scale = sdae::frobenius_norm(oracle::inverse(a)) * sdae::frobenius_norm(a);
    EXPECT_LT(oracle::max_abs_diff(x, y), 1e-12 * cond_scale * (1.0 + sdae::norm2(y)));
  }
}

TEST(SolveLinear, MatrixRightHandSide) {
  const Matrix a{{4, 1}, {2, 3}};
  const Matrix x = sdae::solve_linear(a, Matrix::identity(2));
  EXPECT_LT(oracle::max_abs_diff(x, oracle::inverse(a)), 1e-15);
}

TEST(SolveLinear, SingularMatrixThrows) {
  const Matrix a{{1, 2}, {2, 4}};
  const Vector b{1, 1};
  EXPECT_THROW(sdae::solve_linear(a, b), sdae::SingularMatrixError);
  EXPECT_THROW(sdae::solve_linear(Matrix(2, 2), b), sdae::SingularMatrixError);
}

TEST(SolveLinear, DimensionMismatchThrows) {
  const Vector b{1, 2, 3};
  EXPECT_THROW(sdae::solve_linear(Matrix::identity(2), b), std::invalid_argument);
}
