#include "sdae/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sdae {

Matrix SdaeProblem::jacobian(double t, const Vector& x) const {
  if (f_jacobian) return f_jacobian(t, x);
  return finite_difference_jacobian(*this, t, x);
}

Matrix SdaeProblem::a_derivative(double t) const {
  if (constant_a) return Matrix(d, d);
  if (a_dot) return a_dot(t);
  const double h = 1e-5 * (1.0 + std::abs(t));
  Matrix diff = a_of_t(t + h) - a_of_t(t - h);
  diff *= 1.0 / (2.0 * h);
  return diff;
}

Matrix finite_difference_jacobian(const SdaeProblem& prob, double t, const Vector& x, double rel_step) {
  const double h = rel_step * (1.0 + norm2(x));
  Matrix jac(prob.d, x.size());
  Vector xp = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    const Vector fp = prob.f_drift(t, xp);
    xp[j] = x[j] - h;
    const Vector fm = prob.f_drift(t, xp);
    xp[j] = x[j];
    for (std::size_t i = 0; i < prob.d; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return jac;
}

Vector constraint_residual(const SdaeProblem& prob, double t, const Vector& x, double rank_tol) {
  const ProjectorBundle b = projectors(prob.a_of_t(t), rank_tol);
  return b.r_proj * prob.f_drift(t, x);
}

ConsistencyCheck check_initial_consistency(const SdaeProblem& prob, double tol) {
  ConsistencyCheck c;
  c.residual_norm = norm_inf(constraint_residual(prob, 0.0, prob.x0));
  c.passed = c.residual_norm <= tol;
  return c;
}

double monotonicity_form(const SdaeProblem& prob, double t, const Vector& x, const Vector& y, double p1) {
  const ProjectorBundle b = projectors(prob.a_of_t(t));
  const Vector dp = b.p * subtract(x, y);
  const Vector df = b.a_pinv * subtract(prob.f_drift(t, x), prob.f_drift(t, y));
  double inner = 0.0;
  for (std::size_t i = 0; i < dp.size(); ++i) inner += dp[i] * df[i];
  const Matrix dg = b.a_pinv * (prob.g_diffusion(t, x) - prob.g_diffusion(t, y));
  const double gn = frobenius_norm(dg);
  return 2.0 * inner + (p1 - 1.0) * gn * gn;
}

double coupling_form(const SdaeProblem& prob, double t, const Vector& x, const Vector& y, double p2) {
  const Matrix a = prob.a_of_t(t);
  const Vector da = a * subtract(x, y);
  const Vector df = subtract(prob.f_drift(t, x), prob.f_drift(t, y));
  double inner = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) inner += da[i] * df[i];
  const double gn = frobenius_norm(prob.g_diffusion(t, x) - prob.g_diffusion(t, y));
  return 2.0 * inner + p2 * gn * gn;
}

AssumptionProbe probe_assumptions(const SdaeProblem& prob, std::size_t n_samples, double box_radius,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, prob.horizon);
  std::uniform_real_distribution<double> coord(-box_radius, box_radius);
  const double p1 = prob.constants ? prob.constants->p1 : 2.0;
  const double p2 = prob.constants ? prob.constants->p2.value_or(1.0) : 1.0;

  AssumptionProbe out;
  out.l1_estimate = -std::numeric_limits<double>::infinity();
  out.l2_estimate = -std::numeric_limits<double>::infinity();
  Vector x(prob.d), y(prob.d);
  while (out.samples < n_samples) {
    const double t = time(rng);
    for (std::size_t i = 0; i < prob.d; ++i) {
      x[i] = coord(rng);
      y[i] = coord(rng);
    }
    const double dist = norm2(subtract(x, y));
    if (dist == 0.0) continue;
    const double d2 = dist * dist;
    out.l1_estimate = std::max(out.l1_estimate, monotonicity_form(prob, t, x, y, p1) / d2);
    out.l2_estimate = std::max(out.l2_estimate, coupling_form(prob, t, x, y, p2) / d2);
    ++out.samples;
  }
  return out;
}

}  // namespace sdae
