#include "sdae/stepper.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sdae/csv.hpp"

namespace sdae {

void ThetaConfig::validate(double horizon) const {
  if (!(theta >= 0.5 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [1/2, 1]");
  if (!(delta > 0.0 && delta <= horizon * (1.0 + 1e-12))) throw std::invalid_argument("delta must lie in (0, T]");
  if (!(constraint_check_tol > 0.0)) throw std::invalid_argument("constraint_check_tol must be positive");
}

Vector stm_residual(const SdaeProblem& prob, double theta, double delta, double t_k, const Vector& x_k,
                    const Vector& dw, const Vector& x) {
  if (dw.size() != prob.m) throw std::invalid_argument("stm_residual: dw must have length m");
  const double t_next = t_k + delta;
  Vector h = prob.a_of_t(t_next) * x;
  axpy(-theta * delta, prob.f_drift(t_next, x), h);
  axpy(-1.0, prob.a_of_t(t_k) * x_k, h);
  axpy(-(1.0 - theta) * delta, prob.f_drift(t_k, x_k), h);
  axpy(-1.0, prob.g_diffusion(t_k, x_k) * dw, h);
  return h;
}

namespace {

struct NodeView {
  double t;
  const Matrix& a;
  const Matrix& r_proj;
  const Matrix& scaling;
};

Matrix scaling_matrix(const ProjectorBundle& b, const ThetaConfig& cfg) {
  const std::size_t d = b.a.rows();
  if (!cfg.precondition) return Matrix::identity(d);
  // A A^- = I - R, so D = I - R - R / (theta dt).
  Matrix dmat = Matrix::identity(d) - b.r_proj;
  dmat -= b.r_proj * (1.0 / (cfg.theta * cfg.delta));
  return dmat;
}

double constraint_norm(const SdaeProblem& prob, const NodeView& node, const Vector& x) {
  return norm_inf(node.r_proj * prob.f_drift(node.t, x));
}

StepResult theta_step(const SdaeProblem& prob, const ThetaConfig& cfg, const NodeView& now, const NodeView& next,
                      const Vector& x_k, const Vector& dw) {
  if (dw.size() != prob.m) throw std::invalid_argument("stm_step: dw must have length m");
  const double theta_dt = cfg.theta * cfg.delta;

  Vector rhs = now.a * x_k;
  axpy(1.0, prob.g_diffusion(now.t, x_k) * dw, rhs);
  if (cfg.theta < 1.0) axpy((1.0 - cfg.theta) * cfg.delta, prob.f_drift(now.t, x_k), rhs);

  auto residual = [&](const Vector& x) {
    Vector h = next.a * x;
    axpy(-theta_dt, prob.f_drift(next.t, x), h);
    axpy(-1.0, rhs, h);
    return next.scaling * h;
  };
  auto jacobian = [&](const Vector& x) {
    Matrix j = next.a - prob.jacobian(next.t, x) * theta_dt;
    return next.scaling * j;
  };

  NewtonOutcome nw = newton_solve(residual, jacobian, x_k, cfg.newton);
  StepResult out;
  out.diagnostics.newton_iterations = nw.iterations;
  out.diagnostics.newton_residual = nw.final_residual_norm;
  out.state = std::move(nw.solution);
  if (!nw.converged) {
    out.diagnostics.failure = "Newton: " + nw.failure;
    out.diagnostics.constraint_residual = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.diagnostics.constraint_residual = constraint_norm(prob, next, out.state);
  if (!(out.diagnostics.constraint_residual <= cfg.constraint_check_tol)) {
    std::ostringstream os;
    os << "constraint residual " << out.diagnostics.constraint_residual << " exceeds " << cfg.constraint_check_tol;
    out.diagnostics.failure = os.str();
  }
  return out;
}

}  // namespace

StepResult stm_step(const SdaeProblem& prob, const ThetaConfig& cfg, double t_k, const Vector& x_k,
                    const Vector& dw) {
  if (!(cfg.theta >= 0.5 && cfg.theta <= 1.0) || !(cfg.delta > 0.0)) {
    throw std::invalid_argument("stm_step: theta must lie in [1/2, 1] and delta must be positive");
  }
  const double t_next = t_k + cfg.delta;
  const ProjectorBundle b_now = projectors(prob.a_of_t(t_k), cfg.rank_tol);
  const ProjectorBundle b_next = projectors(prob.a_of_t(t_next), cfg.rank_tol);
  const Matrix d_now = scaling_matrix(b_now, cfg);
  const Matrix d_next = scaling_matrix(b_next, cfg);
  const NodeView now{t_k, b_now.a, b_now.r_proj, d_now};
  const NodeView next{t_next, b_next.a, b_next.r_proj, d_next};

  const double infeasibility = constraint_norm(prob, now, x_k);
  if (!(infeasibility <= cfg.constraint_check_tol)) {
    StepResult out;
    out.state = x_k;
    std::ostringstream os;
    os << "infeasible input state: constraint residual " << infeasibility;
    out.diagnostics.failure = os.str();
    out.diagnostics.constraint_residual = infeasibility;
    return out;
  }
  return theta_step(prob, cfg, now, next, x_k, dw);
}

ThetaIntegrator::ThetaIntegrator(const SdaeProblem& prob, const ThetaConfig& cfg, std::size_t steps)
    : prob_(prob), cfg_(cfg) {
  if (steps == 0) throw std::invalid_argument("ThetaIntegrator: at least one step required");
  cfg_.validate(prob.horizon);
  nodes_.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg_.delta;
    ProjectorBundle b = projectors(prob_.a_of_t(t), cfg_.rank_tol);
    Matrix scaling = scaling_matrix(b, cfg_);
    nodes_.push_back(Node{t, std::move(b.a), std::move(b.r_proj), std::move(scaling)});
  }
}

StepResult ThetaIntegrator::step(std::size_t k, const Vector& x_k, const Vector& dw) const {
  const Node& a = nodes_.at(k);
  const Node& b = nodes_.at(k + 1);
  return theta_step(prob_, cfg_, NodeView{a.t, a.a, a.r_proj, a.scaling}, NodeView{b.t, b.a, b.r_proj, b.scaling},
                    x_k, dw);
}

double ThetaIntegrator::constraint_residual(std::size_t k, const Vector& x) const {
  const Node& n = nodes_.at(k);
  return norm_inf(n.r_proj * prob_.f_drift(n.t, x));
}

IntegrationResult ThetaIntegrator::integrate(std::span<const Vector> increments) const {
  if (increments.size() != steps()) throw std::invalid_argument("integrate: increment count must equal step count");
  IntegrationResult res;
  Trajectory& tr = res.trajectory;
  const std::size_t n = steps() + 1;
  tr.times.reserve(n);
  tr.states.reserve(n);
  tr.newton_iters.reserve(n);
  tr.constraint_residuals.reserve(n);

  tr.times.push_back(nodes_[0].t);
  tr.states.push_back(prob_.x0);
  tr.newton_iters.push_back(0);
  const double r0 = constraint_residual(0, prob_.x0);
  tr.constraint_residuals.push_back(r0);
  if (!(r0 <= cfg_.constraint_check_tol)) {
    res.failed_step = 0;
    res.failure = "inconsistent initial value: constraint residual " + format_double(r0);
    return res;
  }

  for (std::size_t k = 0; k + 1 < n; ++k) {
    StepResult st = step(k, tr.states.back(), increments[k]);
    if (!st.diagnostics.ok()) {
      res.failed_step = k;
      res.failure = "step " + std::to_string(k) + ": " + st.diagnostics.failure;
      return res;
    }
    tr.times.push_back(nodes_[k + 1].t);
    tr.states.push_back(std::move(st.state));
    tr.newton_iters.push_back(st.diagnostics.newton_iterations);
    tr.constraint_residuals.push_back(st.diagnostics.constraint_residual);
  }
  return res;
}

IntegrationResult integrate(const SdaeProblem& prob, const ThetaConfig& cfg, std::span<const Vector> increments) {
  cfg.validate(prob.horizon);
  const double span = static_cast<double>(increments.size()) * cfg.delta;
  if (increments.empty() || std::abs(span - prob.horizon) > 1e-9 * prob.horizon) {
    throw std::invalid_argument("integrate: increments.size() * delta must equal the horizon");
  }
  return ThetaIntegrator(prob, cfg, increments.size()).integrate(increments);
}

GuardVerdict stepsize_guard(const ProblemConstants& c, double theta, double delta, bool constant_a) {
  GuardVerdict v;
  const double denom = c.monotonicity_l1 * theta * (1.0 + c.lhat * c.lhat);
  v.bound = (constant_a ? 0.5 : 1.0) / denom;
  if (!constant_a && c.coupling_l2) v.bound = std::min(v.bound, 1.0 / (2.0 * *c.coupling_l2 * theta));
  v.ok = delta < v.bound;
  std::ostringstream os;
  if (v.ok) {
    os << "dt = " << delta << " is below the sufficient bound " << v.bound;
  } else {
    os << "dt = " << delta << " exceeds the sufficient stepsize bound " << v.bound
       << " (well-posedness and rate are not guaranteed, only not excluded)";
  }
  v.message = os.str();
  return v;
}

GuardVerdict stepsize_guard(const SdaeProblem& prob, double theta, double delta) {
  if (!prob.constants) {
    GuardVerdict v;
    v.skipped = true;
    v.bound = std::numeric_limits<double>::infinity();
    v.message = "no declared constants; stepsize guard skipped";
    return v;
  }
  return stepsize_guard(*prob.constants, theta, delta, prob.constant_a);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t d = traj.states.empty() ? 0 : traj.states.front().size();
  os << 't';
  for (std::size_t i = 1; i <= d; ++i) os << ",x" << i;
  os << ",newton_iters,constraint_residual\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_double(traj.times[k]);
    for (double v : traj.states[k]) os << ',' << format_double(v);
    os << ',' << traj.newton_iters[k] << ',' << format_double(traj.constraint_residuals[k]) << '\n';
  }
}

}  // namespace sdae
