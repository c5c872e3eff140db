#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sdae/problem.hpp"

using sdae::Matrix;
using sdae::Vector;

TEST(Builtins, LabelsAndShapes) {
  const auto& labels = sdae::builtin_labels();
  ASSERT_EQ(labels.size(), 4u);
  for (const auto& l : labels) {
    const sdae::SdaeProblem p = sdae::builtin(l);
    EXPECT_EQ(p.label, l);
    EXPECT_EQ(p.x0.size(), p.d);
    EXPECT_EQ(p.a_of_t(0.3).rows(), p.d);
    EXPECT_EQ(p.g_diffusion(0.3, p.x0).cols(), p.m);
    ASSERT_TRUE(p.constants.has_value());
    EXPECT_TRUE(p.constants->moment_condition_holds()) << l;
  }
}

TEST(Builtins, UnknownLabelNamesValidOnes) {
  try {
    sdae::builtin("nope");
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& l : sdae::builtin_labels()) EXPECT_NE(msg.find(l), std::string::npos);
  }
}

TEST(Builtins, InitialValuesAreConsistent) {
  for (const auto& l : sdae::builtin_labels()) {
    const auto c = sdae::check_initial_consistency(sdae::builtin(l), 1e-12);
    EXPECT_TRUE(c.passed) << l;
    EXPECT_EQ(c.residual_norm, 0.0) << l;
  }
}

TEST(Builtins, AnalyticJacobiansMatchFiniteDifferences) {
  for (const auto& l : sdae::builtin_labels()) {
    const sdae::SdaeProblem p = sdae::builtin(l);
    for (int i = 0; i < 10; ++i) {
      Vector x(p.d);
      for (std::size_t j = 0; j < p.d; ++j) x[j] = std::sin(1.7 * i + j) * 1.5;
      const double t = 0.1 * i;
      const Matrix j = p.jacobian(t, x);
      const Matrix fd = sdae::finite_difference_jacobian(p, t, x);
      EXPECT_LT(oracle::max_abs_diff(j, fd), 1e-6 * (1 + sdae::frobenius_norm(j))) << l;
    }
  }
}

TEST(Builtins, LeadingMatrixDerivative) {
  for (const auto& l : sdae::builtin_labels()) {
    sdae::SdaeProblem p = sdae::builtin(l);
    for (double t : {0.0, 0.25, 0.8}) {
      const double h = 1e-6;
      Matrix fd = p.a_of_t(t + h) - p.a_of_t(t - h);
      fd *= 1.0 / (2 * h);
      EXPECT_LT(oracle::max_abs_diff(p.a_derivative(t), fd), 1e-8) << l;
    }
  }
  // Finite-difference fallback when no derivative is supplied.
  sdae::SdaeProblem p = sdae::builtin("example51");
  p.a_dot = nullptr;
  const double s = 1.0 / std::numbers::sqrt2;
  EXPECT_LT(oracle::max_abs_diff(p.a_derivative(0.5), Matrix{{0, 0}, {-s, s}}), 1e-8);
}

TEST(Builtins, FiniteDifferenceFallbackForJacobian) {
  sdae::SdaeProblem p = sdae::builtin("example52");
  const Vector x{0.7, -0.2, 0.1};
  const Matrix exact = p.jacobian(0.4, x);
  p.f_jacobian = nullptr;
  EXPECT_LT(oracle::max_abs_diff(p.jacobian(0.4, x), exact), 1e-8);
}

TEST(ConstraintResidual, Example51IsRowOneOfTheDrift) {
  const sdae::SdaeProblem p = sdae::builtin("example51");
  const Vector x{0.3, 0.9};
  const double t = 0.6;
  const Vector r = sdae::constraint_residual(p, t, x);
  EXPECT_NEAR(r[0], x[0] + x[1] + std::sin(t), 1e-14);
  EXPECT_NEAR(r[1], 0.0, 1e-14);
}

TEST(ConstraintResidual, InconsistentStartIsDetected) {
  sdae::SdaeProblem p = sdae::builtin("example52");
  p.x0 = {1.0, -1.0, 0.5};
  const auto c = sdae::check_initial_consistency(p, 1e-8);
  EXPECT_FALSE(c.passed);
  EXPECT_NEAR(c.residual_norm, 0.5, 1e-14);
}

TEST(MonotonicityForm, Example52HandEvaluation) {
  // P = diag(1,1,0), A^- = diag(2(t^2+1), 1/10, 0), G = diag(sin t, c x1^2, 0).
  const sdae::SdaeProblem p = sdae::builtin("example52");
  const Vector x{0.5, 1.0, -2.0};
  const Vector y{-0.5, 0.25, 3.0};
  const double t = 0.5, p1 = 21.0;
  const double tau = t * t + 1.0;
  const double df0 = 2 * tau * (-(x[0] * x[0] * x[0]) + y[0] * y[0] * y[0]);
  const double df1 = 0.1 * (x[2] - y[2]);
  const double dg = 0.1 * 0.1 * (x[0] * x[0] - y[0] * y[0]);
  const double expected = 2 * ((x[0] - y[0]) * df0 + (x[1] - y[1]) * df1) + (p1 - 1) * dg * dg;
  EXPECT_NEAR(sdae::monotonicity_form(p, t, x, y, p1), expected, 1e-12);
}

TEST(CouplingForm, Example52HandEvaluation) {
  const sdae::SdaeProblem p = sdae::builtin("example52");
  const Vector x{0.5, 1.0, -2.0};
  const Vector y{-0.5, 0.25, 3.0};
  const double t = 0.5, p2 = 25.0;
  const double a0 = 1.0 / (2 * (t * t + 1.0));
  const double term = a0 * (x[0] - y[0]) * (-(x[0] * x[0] * x[0]) + y[0] * y[0] * y[0]) +
                      10.0 * (x[1] - y[1]) * (x[2] - y[2]);
  const double dg = 0.1 * (x[0] * x[0] - y[0] * y[0]);
  EXPECT_NEAR(sdae::coupling_form(p, t, x, y, p2), 2 * term + p2 * dg * dg, 1e-12);
}

TEST(Probe, DeterministicAndWithinDeclaredConstants) {
  for (const char* l : {"example51", "example52"}) {
    const sdae::SdaeProblem p = sdae::builtin(l);
    const auto a = sdae::probe_assumptions(p, 2000, 2.0, 5);
    const auto b = sdae::probe_assumptions(p, 2000, 2.0, 5);
    EXPECT_EQ(a.l1_estimate, b.l1_estimate);
    EXPECT_EQ(a.samples, 2000u);
    EXPECT_LE(a.l1_estimate, p.constants->monotonicity_l1) << l;
    EXPECT_LE(a.l2_estimate, *p.constants->coupling_l2) << l;
  }
}

TEST(Probe, Remark31CouplingGrowsWithRadius) {
  const sdae::SdaeProblem p = sdae::builtin("remark31");
  EXPECT_FALSE(p.constants->coupling_l2.has_value());
  const auto small = sdae::probe_assumptions(p, 2000, 1.0, 3);
  const auto large = sdae::probe_assumptions(p, 2000, 8.0, 3);
  EXPECT_GT(large.l2_estimate, 10.0 * small.l2_estimate);
  EXPECT_LE(large.l1_estimate, p.constants->monotonicity_l1);
}
