#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sdae/problem.hpp"

namespace sdae {

namespace {

// 2-D problem with a rank-1 leading matrix whose scale grows in time:
// A_t = (t^2 + 1) [[0, 0], [-1/sqrt2, 1/sqrt2]], a = 1, b = 1/5, X_0 = (1, -1).
SdaeProblem make_example51() {
  constexpr double a = 1.0;
  constexpr double b = 0.2;
  constexpr double horizon = 1.0;
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

  SdaeProblem p;
  p.label = "example51";
  p.d = 2;
  p.m = 2;
  p.horizon = horizon;
  p.a_of_t = [inv_sqrt2](double t) {
    const double tau = t * t + 1.0;
    return Matrix{{0.0, 0.0}, {-inv_sqrt2 * tau, inv_sqrt2 * tau}};
  };
  p.a_dot = [inv_sqrt2](double t) { return Matrix{{0.0, 0.0}, {-inv_sqrt2 * 2.0 * t, inv_sqrt2 * 2.0 * t}}; };
  p.f_drift = [](double t, const Vector& x) {
    const double y = x[0] - x[1];
    return Vector{x[0] + x[1] + std::sin(t), y * y * y - a * y + 1.0};
  };
  p.f_jacobian = [](double, const Vector& x) {
    const double y = x[0] - x[1];
    const double dy = 3.0 * y * y - a;
    return Matrix{{1.0, 1.0}, {dy, -dy}};
  };
  p.g_diffusion = [](double, const Vector& x) {
    const double y = x[0] - x[1];
    return Matrix{{0.0, 0.0}, {b * (x[0] + x[1] + 1.0), b * y * y + 2.0 * b}};
  };
  p.x0 = {1.0, -1.0};

  ProblemConstants c;
  c.rank_r = 1;
  c.sigma_lo = 1.0;
  c.sigma_hi = horizon * horizon + 1.0;
  c.gamma = 3.0;
  // (p1 - 1) b^2 <= 3/4 caps p1 at 19.75; p1 > 4 gamma - 2 = 10.
  c.p1 = 19.0;
  c.monotonicity_l1 = 2.0 * (a + (c.p1 - 1.0) * b * b);
  // Rank one: the coupling condition follows with p2 = p1 - 1, L2 = sigma_hi^2 L1.
  c.p2 = c.p1 - 1.0;
  c.coupling_l2 = c.sigma_hi * c.sigma_hi * c.monotonicity_l1;
  c.jacobian_bound_lj = std::sqrt(1.5);
  c.lhat = c.sigma_hi * c.jacobian_bound_lj + 2.0;
  p.constants = c;
  return p;
}

// 3-D problem with A_t = diag(1/(2(t^2+1)), 10, 0), c = 1/10, T = 1.
SdaeProblem make_example52() {
  constexpr double c_noise = 0.1;
  constexpr double horizon = 1.0;

  SdaeProblem p;
  p.label = "example52";
  p.d = 3;
  p.m = 3;
  p.horizon = horizon;
  p.a_of_t = [](double t) {
    const double diag[] = {1.0 / (2.0 * (t * t + 1.0)), 10.0, 0.0};
    return Matrix::diagonal(diag);
  };
  p.a_dot = [](double t) {
    const double tau = t * t + 1.0;
    const double diag[] = {-t / (tau * tau), 0.0, 0.0};
    return Matrix::diagonal(diag);
  };
  p.f_drift = [](double t, const Vector& x) { return Vector{-x[0] * x[0] * x[0], x[2], x[1] * t + x[2]}; };
  p.f_jacobian = [](double t, const Vector& x) {
    return Matrix{{-3.0 * x[0] * x[0], 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, t, 1.0}};
  };
  p.g_diffusion = [](double t, const Vector& x) {
    const double diag[] = {std::sin(t), c_noise * x[0] * x[0], 0.0};
    return Matrix::diagonal(diag);
  };
  p.x0 = {1.0, -1.0, 0.0};

  ProblemConstants c;
  c.rank_r = 2;
  c.sigma_lo = 1.0 / (2.0 * (horizon * horizon + 1.0));
  c.sigma_hi = 10.0;
  c.monotonicity_l1 = 0.1;
  c.gamma = 3.0;
  c.p1 = 21.0;
  c.coupling_l2 = 10.0;
  c.p2 = 25.0;
  c.jacobian_bound_lj = 2.0 * (horizon * horizon + 1.0) + 2.0 * (horizon + 1.0);
  c.lhat = std::sqrt(0.25 + 100.0) * c.jacobian_bound_lj + 3.0;
  p.constants = c;
  return p;
}

// Constant A = diag(1/2, 10, 0) with a cubic drift for which the monotonicity
// condition holds (p1 = 11) but the coupling condition has no finite L2.
// The third drift row is -x3 so the algebraic variable is pinned to 0 and the
// constraint Jacobian stays invertible.
SdaeProblem make_remark31() {
  constexpr double horizon = 1.0;

  SdaeProblem p;
  p.label = "remark31";
  p.d = 3;
  p.m = 3;
  p.horizon = horizon;
  p.constant_a = true;
  p.a_of_t = [](double) {
    const double diag[] = {0.5, 10.0, 0.0};
    return Matrix::diagonal(diag);
  };
  p.f_drift = [](double, const Vector& x) { return Vector{-x[0] * x[0] * x[0], 0.0, -x[2]}; };
  p.f_jacobian = [](double, const Vector& x) {
    return Matrix{{-3.0 * x[0] * x[0], 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, -1.0}};
  };
  p.g_diffusion = [](double, const Vector& x) {
    const double diag[] = {0.0, x[0] * x[0], 0.0};
    return Matrix::diagonal(diag);
  };
  p.x0 = {1.0, 0.0, 0.0};

  ProblemConstants c;
  c.rank_r = 2;
  c.sigma_lo = 0.5;
  c.sigma_hi = 10.0;
  c.monotonicity_l1 = 0.1;
  c.gamma = 3.0;
  c.p1 = 11.0;
  c.jacobian_bound_lj = std::sqrt(4.0 + 0.01 + 1.0);
  c.lhat = std::sqrt(0.25 + 100.0) * c.jacobian_bound_lj + 3.0;
  p.constants = c;
  return p;
}

// dX = -X dt, X_0 = 1: closed-form check for the theta recursion.
SdaeProblem make_linear_sanity() {
  constexpr double lambda = -1.0;

  SdaeProblem p;
  p.label = "linear_sanity";
  p.d = 1;
  p.m = 1;
  p.horizon = 1.0;
  p.constant_a = true;
  p.a_of_t = [](double) { return Matrix{{1.0}}; };
  p.f_drift = [](double, const Vector& x) { return Vector{lambda * x[0]}; };
  p.f_jacobian = [](double, const Vector&) { return Matrix{{lambda}}; };
  p.g_diffusion = [](double, const Vector&) { return Matrix{{0.0}}; };
  p.x0 = {1.0};

  ProblemConstants c;
  c.rank_r = 1;
  c.sigma_lo = 1.0;
  c.sigma_hi = 1.0;
  c.monotonicity_l1 = 1.0;
  c.gamma = 1.0;
  c.p1 = 3.0;
  c.coupling_l2 = 1.0;
  c.p2 = 2.0;
  c.jacobian_bound_lj = 1.0;
  c.lhat = 1.0 * c.jacobian_bound_lj + 1.0;
  p.constants = c;
  return p;
}

}  // namespace

const std::vector<std::string>& builtin_labels() {
  static const std::vector<std::string> labels{"example51", "example52", "remark31", "linear_sanity"};
  return labels;
}

SdaeProblem builtin(std::string_view label) {
  if (label == "example51") return make_example51();
  if (label == "example52") return make_example52();
  if (label == "remark31") return make_remark31();
  if (label == "linear_sanity") return make_linear_sanity();
  std::ostringstream os;
  os << "unknown problem '" << label << "'; valid labels:";
  for (const auto& l : builtin_labels()) os << ' ' << l;
  throw std::invalid_argument(os.str());
}

}  // namespace sdae
