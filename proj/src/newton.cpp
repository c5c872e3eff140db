#include "sdae/newton.hpp"

#include <stdexcept>

namespace sdae {

namespace {

Vector shifted(const Vector& x, double lambda, const Vector& dx) {
  Vector out = x;
  axpy(lambda, dx, out);
  return out;
}

NewtonOutcome finish(Vector x, int iterations, double residual_norm, std::vector<double> history, std::string failure) {
  NewtonOutcome out;
  out.solution = std::move(x);
  out.iterations = iterations;
  out.final_residual_norm = residual_norm;
  out.converged = failure.empty();
  out.residual_history = std::move(history);
  out.failure = std::move(failure);
  return out;
}

}  // namespace

NewtonOutcome newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vector x_init,
                           const NewtonConfig& cfg) {
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw std::invalid_argument("newton_solve: invalid config");

  Vector x = std::move(x_init);
  Vector r = residual(x);
  if (r.size() != x.size()) throw std::invalid_argument("newton_solve: residual dimension mismatch");
  double r_norm = norm_inf(r);
  std::vector<double> history{r_norm};
  if (!all_finite(r)) return finish(std::move(x), 0, r_norm, std::move(history), "non-finite residual");

  for (int iter = 0;; ++iter) {
    Vector dx;
    try {
      Vector rhs = r;
      for (double& v : rhs) v = -v;
      dx = solve_linear(jacobian(x), rhs);
    } catch (const SingularMatrixError& e) {
      return finish(std::move(x), iter, r_norm, std::move(history), std::string("singular Jacobian: ") + e.what());
    }

    if (norm_inf(dx) <= cfg.tol) {
      Vector xn = shifted(x, 1.0, dx);
      Vector rn = residual(xn);
      const double rn_norm = norm_inf(rn);
      if (all_finite(rn) && rn_norm <= 10.0 * cfg.tol) {
        history.push_back(rn_norm);
        return finish(std::move(xn), iter, rn_norm, std::move(history), {});
      }
      return finish(std::move(x), iter, r_norm, std::move(history), "stalled: small correction, large residual");
    }
    if (iter == cfg.max_iter) break;

    double lambda = 1.0;
    Vector xn = shifted(x, lambda, dx);
    Vector rn = residual(xn);
    double rn_norm = norm_inf(rn);
    int backtracks = 0;
    while ((!all_finite(rn) || rn_norm > r_norm) && backtracks < cfg.max_backtracks) {
      lambda *= cfg.damping;
      xn = shifted(x, lambda, dx);
      rn = residual(xn);
      rn_norm = norm_inf(rn);
      ++backtracks;
    }
    if (!all_finite(rn) || rn_norm > r_norm) {
      return finish(std::move(x), iter, r_norm, std::move(history), "line search failed to reduce residual");
    }
    x = std::move(xn);
    r = std::move(rn);
    r_norm = rn_norm;
    history.push_back(r_norm);
  }
  return finish(std::move(x), cfg.max_iter, r_norm, std::move(history), "iteration limit reached");
}

}  // namespace sdae
