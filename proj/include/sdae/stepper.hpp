#pragma once

// Stochastic theta method for index-1 SDAEs:
//
//   A_{k+1} x_{k+1} = A_k x_k + theta F(t_{k+1}, x_{k+1}) dt
//                     + (1 - theta) F(t_k, x_k) dt + G(t_k, x_k) dW_k
//
// Each step is a nonlinear solve for x_{k+1}. The algebraic rows of the
// system scale like dt, so by default Newton works on D H(x) = 0 with
// D = A A^- - R / (theta dt); D is invertible and does not move the root.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdae/newton.hpp"
#include "sdae/problem.hpp"

namespace sdae {

struct ThetaConfig {
  double theta = 1.0;
  double delta = 0.0;
  NewtonConfig newton;
  bool precondition = true;
  double constraint_check_tol = 1e-3;
  double rank_tol = kDefaultRankTol;

  /// Throws std::invalid_argument unless 1/2 <= theta <= 1 and
  /// 0 < delta <= horizon.
  void validate(double horizon) const;
};

struct StepDiagnostics {
  int newton_iterations = 0;
  double newton_residual = 0.0;
  double constraint_residual = 0.0;  // |R F(t_{k+1}, x_{k+1})|_inf
  std::string failure;

  bool ok() const { return failure.empty(); }
};

struct StepResult {
  Vector state;
  StepDiagnostics diagnostics;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<int> newton_iters;             // 0 for the initial node
  std::vector<double> constraint_residuals;  // per node

  std::size_t size() const { return states.size(); }
};

struct IntegrationResult {
  Trajectory trajectory;  // partial when a step failed
  std::optional<std::size_t> failed_step;
  std::string failure;

  bool ok() const { return !failed_step.has_value(); }
};

/// H(x) = A_{t_k+dt} x - theta dt F(t_k+dt, x)
///        - [A_{t_k} x_k + (1 - theta) dt F(t_k, x_k) + G(t_k, x_k) dw]
Vector stm_residual(const SdaeProblem& prob, double theta, double delta, double t_k, const Vector& x_k,
                    const Vector& dw, const Vector& x);

/// One step from a feasible x_k. Failures (infeasible input, Newton
/// non-convergence, constraint drift above constraint_check_tol) are
/// reported in the diagnostics.
StepResult stm_step(const SdaeProblem& prob, const ThetaConfig& cfg, double t_k, const Vector& x_k,
                    const Vector& dw);

/// Theta method on a fixed uniform grid with the per-node matrices
/// (A_k, R_k and the scaling D_k) computed once up front. Immutable after
/// construction, so one instance may serve many paths concurrently.
class ThetaIntegrator {
 public:
  ThetaIntegrator(const SdaeProblem& prob, const ThetaConfig& cfg, std::size_t steps);

  std::size_t steps() const { return nodes_.size() - 1; }
  double time(std::size_t k) const { return nodes_[k].t; }
  const ThetaConfig& config() const { return cfg_; }

  StepResult step(std::size_t k, const Vector& x_k, const Vector& dw) const;

  /// increments.size() must equal steps(). Starts from prob.x0 and stops at
  /// the first failed step.
  IntegrationResult integrate(std::span<const Vector> increments) const;

  /// |R_k F(t_k, x)|_inf
  double constraint_residual(std::size_t k, const Vector& x) const;

 private:
  struct Node {
    double t = 0.0;
    Matrix a;
    Matrix r_proj;
    Matrix scaling;  // D_k, or identity when preconditioning is off
  };

  SdaeProblem prob_;
  ThetaConfig cfg_;
  std::vector<Node> nodes_;
};

/// Integrates over [0, T] with K = increments.size() steps; requires
/// K * cfg.delta == T up to roundoff and a consistent initial value.
IntegrationResult integrate(const SdaeProblem& prob, const ThetaConfig& cfg, std::span<const Vector> increments);

struct GuardVerdict {
  bool ok = true;
  bool skipped = false;
  double bound = 0.0;
  std::string message;
};

/// Sufficient stepsize condition for well-posedness and order 1/2:
/// dt < min{1 / (L1 theta (1 + Lhat^2)), 1 / (2 L2 theta)}, the second term
/// only when L2 is declared. With constant_a the bound is
/// 1 / (2 L1 theta (1 + Lhat^2)) and L2 is not used. Violations produce a
/// warning verdict, never an error.
GuardVerdict stepsize_guard(const ProblemConstants& constants, double theta, double delta, bool constant_a = false);

/// As above; skipped for problems without declared constants.
GuardVerdict stepsize_guard(const SdaeProblem& prob, double theta, double delta);

/// Header `t,x1,...,xd,newton_iters,constraint_residual`, 17 significant
/// digits per float.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace sdae
