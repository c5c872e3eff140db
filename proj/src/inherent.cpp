#include "sdae/inherent.hpp"

#include <cmath>
#include <sstream>

#include "sdae/csv.hpp"
#include "sdae/newton.hpp"

namespace sdae {

namespace {

Matrix transpose_times(const Matrix& a, const Matrix& b) { return a.transposed() * b; }

Vector transpose_times(const Matrix& a, const Vector& x) { return a.transposed() * x; }

double constraint_equation_norm(const SdaeProblem& prob, const ProjectorBundle& b, double t, const Vector& u,
                                const Vector& v) {
  Vector h = b.a * v;
  Vector x = u;
  axpy(1.0, v, x);
  axpy(1.0, b.r_proj * prob.f_drift(t, x), h);
  return norm_inf(h);
}

}  // namespace

Vector solve_constraint(const SdaeProblem& prob, const ProjectorBundle& bundle, double t, const Vector& u,
                        const Vector* guess) {
  const std::size_t d = prob.d;
  if (u.size() != d) throw std::invalid_argument("solve_constraint: u must have length d");
  const std::size_t nk = d - bundle.rank;
  if (nk == 0) return Vector(d, 0.0);

  const Matrix& kb = bundle.kernel_basis;
  const Matrix& cb = bundle.cokernel_basis;
  const Matrix cbt = cb.transposed();
  auto lift = [&](const Vector& s) {
    Vector x = u;
    axpy(1.0, kb * s, x);
    return x;
  };
  auto residual = [&](const Vector& s) { return cbt * prob.f_drift(t, lift(s)); };
  auto jacobian = [&](const Vector& s) { return cbt * (prob.jacobian(t, lift(s)) * kb); };

  Vector s0 = guess ? transpose_times(kb, *guess) : Vector(nk, 0.0);
  NewtonConfig nc;
  nc.tol = 1e-12;
  nc.max_iter = 100;
  const NewtonOutcome nw = newton_solve(residual, jacobian, std::move(s0), nc);

  Vector v = kb * nw.solution;
  const double res = all_finite(v) ? constraint_equation_norm(prob, bundle, t, u, v) : HUGE_VAL;
  if (!(res <= kConstraintSolveTol)) {
    std::ostringstream os;
    os << "constraint solve failed at t = " << t << ": residual " << res;
    if (!nw.converged) os << " (" << nw.failure << ")";
    throw ConstraintSolveError(os.str());
  }
  return v;
}

Vector solve_constraint(const SdaeProblem& prob, double t, const Vector& u, const Vector* guess) {
  return solve_constraint(prob, projectors(prob.a_of_t(t)), t, u, guess);
}

Matrix constraint_sensitivity(const SdaeProblem& prob, const ProjectorBundle& bundle, double t, const Vector& x) {
  const std::size_t d = prob.d;
  if (bundle.rank == d) return Matrix(d, d);
  const Matrix ct_fp = transpose_times(bundle.cokernel_basis, prob.jacobian(t, x));
  const Matrix reduced = ct_fp * bundle.kernel_basis;
  Matrix out = bundle.kernel_basis * solve_linear(reduced, ct_fp);
  out *= -1.0;
  return out;
}

InherentCoefficients inherent_coeffs(const SdaeProblem& prob) {
  InherentCoefficients c;
  c.v_hat = [prob](double t, const Vector& u) { return solve_constraint(prob, t, u); };
  c.f_eval = [prob](double t, const Vector& u) {
    const ProjectorBundle b = projectors(prob.a_of_t(t));
    Vector x = u;
    axpy(1.0, solve_constraint(prob, b, t, u), x);
    return b.a_pinv * prob.f_drift(t, x);
  };
  c.g_eval = [prob](double t, const Vector& u) {
    const ProjectorBundle b = projectors(prob.a_of_t(t));
    Vector x = u;
    axpy(1.0, solve_constraint(prob, b, t, u), x);
    return b.a_pinv * prob.g_diffusion(t, x);
  };
  return c;
}

namespace {

struct InherentNode {
  double t = 0.0;
  ProjectorBundle bundle;
  Matrix rate;  // A_t^- A_t'
};

// Warm-started V^ evaluation along one trajectory.
class ConstraintCache {
 public:
  ConstraintCache(const SdaeProblem& prob, const InherentNode& node, Vector guess)
      : prob_(&prob), node_(&node), v_(std::move(guess)) {}

  const Vector& at(const Vector& u) {
    if (!valid_ || u != u_) {
      v_ = solve_constraint(*prob_, node_->bundle, node_->t, u, &v_);
      u_ = u;
      valid_ = true;
    }
    return v_;
  }

  Vector state(const Vector& u) {
    Vector x = u;
    axpy(1.0, at(u), x);
    return x;
  }

 private:
  const SdaeProblem* prob_;
  const InherentNode* node_;
  Vector u_;
  Vector v_;
  bool valid_ = false;
};

Vector u_drift(const SdaeProblem& prob, const InherentNode& node, const Vector& u, const Vector& x) {
  Vector f = node.bundle.a_pinv * prob.f_drift(node.t, x);
  axpy(-1.0, node.rate * u, f);
  return f;
}

}  // namespace

IntegrationResult integrate_inherent(const SdaeProblem& prob, const ThetaConfig& cfg,
                                     std::span<const Vector> increments) {
  cfg.validate(prob.horizon);
  const std::size_t steps = increments.size();
  if (steps == 0 || std::abs(static_cast<double>(steps) * cfg.delta - prob.horizon) > 1e-9 * prob.horizon) {
    throw std::invalid_argument("integrate_inherent: increments.size() * delta must equal the horizon");
  }
  const std::size_t d = prob.d;
  const double theta_dt = cfg.theta * cfg.delta;

  std::vector<InherentNode> nodes;
  nodes.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.delta;
    ProjectorBundle b = projectors(prob.a_of_t(t), cfg.rank_tol);
    Matrix rate = b.a_pinv * prob.a_derivative(t);
    nodes.push_back(InherentNode{t, std::move(b), std::move(rate)});
  }

  IntegrationResult res;
  Trajectory& tr = res.trajectory;
  auto fail = [&](std::size_t k, const std::string& msg) {
    res.failed_step = k;
    res.failure = msg;
    return res;
  };

  const double r0 = norm_inf(nodes[0].bundle.r_proj * prob.f_drift(0.0, prob.x0));
  if (!(r0 <= cfg.constraint_check_tol)) {
    return fail(0, "inconsistent initial value: constraint residual " + format_double(r0));
  }

  Vector u = nodes[0].bundle.p * prob.x0;
  Vector v;
  try {
    const Vector q0 = nodes[0].bundle.q * prob.x0;
    v = solve_constraint(prob, nodes[0].bundle, 0.0, u, &q0);
  } catch (const ConstraintSolveError& e) {
    return fail(0, e.what());
  }
  Vector x = u;
  axpy(1.0, v, x);
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  tr.newton_iters.push_back(0);
  tr.constraint_residuals.push_back(norm_inf(nodes[0].bundle.r_proj * prob.f_drift(0.0, x)));

  const Matrix eye = Matrix::identity(d);
  for (std::size_t k = 0; k < steps; ++k) {
    const InherentNode& now = nodes[k];
    const InherentNode& next = nodes[k + 1];
    const Vector& dw = increments[k];
    if (dw.size() != prob.m) throw std::invalid_argument("integrate_inherent: increments must have length m");
    try {
      Vector rhs = u;
      axpy(1.0, now.bundle.a_pinv * (prob.g_diffusion(now.t, x) * dw), rhs);
      if (cfg.theta < 1.0) axpy((1.0 - cfg.theta) * cfg.delta, u_drift(prob, now, u, x), rhs);

      ConstraintCache cache(prob, next, v);
      auto residual = [&](const Vector& w) {
        Vector h = w;
        axpy(-theta_dt, u_drift(prob, next, w, cache.state(w)), h);
        axpy(-1.0, rhs, h);
        return h;
      };
      auto jacobian = [&](const Vector& w) {
        const Vector xw = cache.state(w);
        Matrix dx = eye + constraint_sensitivity(prob, next.bundle, next.t, xw);
        Matrix df = next.bundle.a_pinv * (prob.jacobian(next.t, xw) * dx) - next.rate;
        return eye - df * theta_dt;
      };
      const NewtonOutcome nw = newton_solve(residual, jacobian, u, cfg.newton);
      if (!nw.converged) return fail(k, "step " + std::to_string(k) + ": Newton: " + nw.failure);

      u = nw.solution;
      v = cache.at(u);
      x = u;
      axpy(1.0, v, x);
      const double cres = norm_inf(next.bundle.r_proj * prob.f_drift(next.t, x));
      if (!(cres <= cfg.constraint_check_tol)) {
        return fail(k, "step " + std::to_string(k) + ": constraint residual " + format_double(cres));
      }
      tr.times.push_back(next.t);
      tr.states.push_back(x);
      tr.newton_iters.push_back(nw.iterations);
      tr.constraint_residuals.push_back(cres);
    } catch (const ConstraintSolveError& e) {
      return fail(k, "step " + std::to_string(k) + ": " + e.what());
    }
  }
  return res;
}

}  // namespace sdae
