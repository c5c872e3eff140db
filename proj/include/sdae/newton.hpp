#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdae/linalg.hpp"

namespace sdae {

struct NewtonConfig {
  double tol = 1e-5;
  int max_iter = 50;
  double damping = 0.5;  // backtracking factor
  int max_backtracks = 20;
};

struct NewtonOutcome {
  Vector solution;
  // Number of corrections applied before the Newton correction at the
  // current iterate fell below tol (the final, tiny correction is applied
  // but not counted). A linear system therefore reports 1.
  int iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  std::vector<double> residual_history;  // infinity norms, one per iterate
  std::string failure;                   // empty when converged
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Damped Newton-Raphson for square systems. Converged iff the last
/// correction satisfies |dx|_inf <= tol and |residual|_inf <= 10 tol.
/// Each damped update is accepted only if it does not increase the
/// residual's infinity norm. Failures (singular Jacobian, non-finite
/// residual, stalled line search, iteration cap) are reported through the
/// outcome, never thrown.
NewtonOutcome newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vector x_init,
                           const NewtonConfig& cfg = {});

}  // namespace sdae
