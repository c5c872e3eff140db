#pragma once

// The SDAE model  A_t dX_t = F(t, X_t) dt + G(t, X_t) dW_t  together with
// its declared assumption constants and the built-in test problems.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdae/linalg.hpp"

namespace sdae {

using TimeMatrixFn = std::function<Matrix(double t)>;
using DriftFn = std::function<Vector(double t, const Vector& x)>;
using StateMatrixFn = std::function<Matrix(double t, const Vector& x)>;

/// Constants of the monotonicity/index-1 hypotheses. They are declared
/// metadata: the library samples them (probe_assumptions, run_problem_checks)
/// but cannot prove them.
struct ProblemConstants {
  std::size_t rank_r = 0;
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  double monotonicity_l1 = 0.0;
  double gamma = 1.0;
  double p1 = 0.0;
  std::optional<double> coupling_l2;
  std::optional<double> p2;
  double jacobian_bound_lj = 0.0;
  double lhat = 0.0;  // (sup_t |A_t|) * L_J + d

  /// p1 > 4 gamma - 2
  bool moment_condition_holds() const { return p1 > 4.0 * gamma - 2.0; }
};

struct SdaeProblem {
  std::string label;
  std::size_t d = 0;
  std::size_t m = 0;
  double horizon = 1.0;
  TimeMatrixFn a_of_t;
  TimeMatrixFn a_dot;  // optional d/dt A_t; central differences when empty
  DriftFn f_drift;
  StateMatrixFn f_jacobian;  // optional; central differences when empty
  StateMatrixFn g_diffusion;
  Vector x0;
  std::optional<ProblemConstants> constants;
  bool constant_a = false;

  /// F'_x(t, x), analytic when supplied.
  Matrix jacobian(double t, const Vector& x) const;

  /// d/dt A_t; zero when constant_a is set.
  Matrix a_derivative(double t) const;
};

/// Central-difference estimate of F'_x with per-coordinate step
/// h = rel_step * (1 + |x|).
Matrix finite_difference_jacobian(const SdaeProblem& prob, double t, const Vector& x, double rel_step = 1e-5);

/// R_t F(t, x); zero exactly on the constraint set M_t.
Vector constraint_residual(const SdaeProblem& prob, double t, const Vector& x, double rank_tol = kDefaultRankTol);

struct ConsistencyCheck {
  bool passed = false;
  double residual_norm = 0.0;  // infinity norm of R_0 F(0, x0)
};

ConsistencyCheck check_initial_consistency(const SdaeProblem& prob, double tol);

const std::vector<std::string>& builtin_labels();

/// One of: example51, example52, remark31, linear_sanity. Throws
/// std::invalid_argument naming the valid labels otherwise.
SdaeProblem builtin(std::string_view label);

/// 2<Px - Py, A^- F(t,x) - A^- F(t,y)> + (p1 - 1)|A^- G(t,x) - A^- G(t,y)|^2
double monotonicity_form(const SdaeProblem& prob, double t, const Vector& x, const Vector& y, double p1);

/// 2<A x - A y, F(t,x) - F(t,y)> + p2 |G(t,x) - G(t,y)|^2
double coupling_form(const SdaeProblem& prob, double t, const Vector& x, const Vector& y, double p2);

struct AssumptionProbe {
  double l1_estimate = 0.0;  // max of monotonicity_form / |x-y|^2
  double l2_estimate = 0.0;  // max of coupling_form / |x-y|^2
  std::size_t samples = 0;
};

/// Uniform sampling of t in [0, T] and x, y in the box [-radius, radius]^d.
/// Uses the declared p1 (and p2, or 1 when absent).
AssumptionProbe probe_assumptions(const SdaeProblem& prob, std::size_t n_samples, double box_radius,
                                  std::uint64_t seed);

}  // namespace sdae
