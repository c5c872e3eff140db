#pragma once

// Decoupled form of an index-1 SDAE. With U = P X the algebraic part is
// V = V^(t, U), the solution of  A_t v + R F(t, u + v) = 0  with P v = 0,
// and the state is X = U + V^(t, U). U obeys an unconstrained SDE with
//
//   f(t, u) = A_t^- F(t, u + V^(t, u)),   g(t, u) = A_t^- G(t, u + V^(t, u)).

#include <functional>
#include <span>
#include <stdexcept>

#include "sdae/linalg.hpp"
#include "sdae/problem.hpp"
#include "sdae/stepper.hpp"

namespace sdae {

class ConstraintSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kConstraintSolveTol = 1e-10;

/// v with P v = 0 (v is built from a basis of Ker(A_t)) and
/// |A_t v + R F(t, u + v)|_inf <= 1e-10. `guess` seeds the solve (only its
/// Ker(A_t) component is used). Throws ConstraintSolveError.
Vector solve_constraint(const SdaeProblem& prob, double t, const Vector& u, const Vector* guess = nullptr);

/// Same, with the projector bundle of A_t supplied by the caller.
Vector solve_constraint(const SdaeProblem& prob, const ProjectorBundle& bundle, double t, const Vector& u,
                        const Vector* guess = nullptr);

/// dV^/du = -K (C^T F' K)^{-1} C^T F' at x = u + V^(t, u), where the columns
/// of K and C span Ker(A_t) and Ker(A_t^T).
Matrix constraint_sensitivity(const SdaeProblem& prob, const ProjectorBundle& bundle, double t, const Vector& x);

struct InherentCoefficients {
  std::function<Vector(double t, const Vector& u)> f_eval;
  std::function<Matrix(double t, const Vector& u)> g_eval;
  std::function<Vector(double t, const Vector& u)> v_hat;
};

/// Each evaluation solves the constraint from a zero guess.
InherentCoefficients inherent_coeffs(const SdaeProblem& prob);

/// Theta method on U followed by X_k = U_k + V^(t_k, U_k). The scheme of the
/// stepper discretizes d(A_t X_t), so for time-dependent A_t the U drift
/// carries the product-rule term -A_t^- A_t' u in addition to f; it vanishes
/// for constant A. Same preconditions and failure reporting as integrate.
IntegrationResult integrate_inherent(const SdaeProblem& prob, const ThetaConfig& cfg,
                                     std::span<const Vector> increments);

}  // namespace sdae
