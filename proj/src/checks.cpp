#include "sdae/checks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "sdae/inherent.hpp"
#include "sdae/stepper.hpp"

namespace sdae {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

class Sampler {
 public:
  Sampler(const SdaeProblem& prob, double radius, std::uint64_t seed)
      : prob_(prob), rng_(seed), time_(0.0, prob.horizon), box_(-radius, radius) {}

  double time() { return time_(rng_); }
  Vector point() {
    Vector x(prob_.d);
    for (double& v : x) v = box_(rng_);
    return x;
  }

 private:
  const SdaeProblem& prob_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> time_;
  std::uniform_real_distribution<double> box_;
};

std::vector<double> time_grid(double horizon, std::size_t n) {
  std::vector<double> ts;
  for (std::size_t i = 0; i < n; ++i) ts.push_back(n == 1 ? 0.0 : horizon * static_cast<double>(i) / (n - 1));
  return ts;
}

class Builder {
 public:
  explicit Builder(CheckReport& r) : r_(r) {}
  void add(std::string name, CheckStatus s, std::string detail) {
    r_.items.push_back({std::move(name), s, std::move(detail)});
  }
  void verdict(std::string name, bool ok, std::string detail) {
    add(std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail));
  }

 private:
  CheckReport& r_;
};

void check_algebra(const SdaeProblem& prob, const CheckOptions& opt, Builder& out) {
  double mp = 0.0, proj = 0.0, drift_p = 0.0;
  std::size_t rank_lo = prob.d, rank_hi = 0;
  double sig_min = HUGE_VAL, sig_max = 0.0, norm_a = 0.0, norm_pinv = 0.0;
  const Matrix eye = Matrix::identity(prob.d);
  const Matrix p0 = projectors(prob.a_of_t(0.0)).p;

  for (double t : time_grid(prob.horizon, opt.n_times)) {
    const Matrix a = prob.a_of_t(t);
    const ProjectorBundle b = projectors(a);
    const SvdFactors f = svd(a);
    const Matrix& ap = b.a_pinv;
    const double scale = 1.0 + frobenius_norm(a) * frobenius_norm(ap);
    mp = std::max({mp, frobenius_norm(a * ap * a - a) / (1.0 + frobenius_norm(a)),
                   frobenius_norm(ap * a * ap - ap) / (1.0 + frobenius_norm(ap)),
                   frobenius_norm((a * ap).transposed() - a * ap) / scale,
                   frobenius_norm((ap * a).transposed() - ap * a) / scale});
    proj = std::max({proj, frobenius_norm(b.p * b.p - b.p), frobenius_norm(b.q * b.q - b.q),
                     frobenius_norm(b.r_proj * b.r_proj - b.r_proj), frobenius_norm(b.p + b.q - eye),
                     frobenius_norm(a * b.q) / (1.0 + frobenius_norm(a)),
                     frobenius_norm(b.r_proj * a) / (1.0 + frobenius_norm(a))});
    drift_p = std::max(drift_p, frobenius_norm(b.p - p0));
    rank_lo = std::min(rank_lo, b.rank);
    rank_hi = std::max(rank_hi, b.rank);
    if (b.rank > 0) {
      sig_min = std::min(sig_min, f.singular_values[b.rank - 1]);
      sig_max = std::max(sig_max, f.singular_values[0]);
    }
    norm_a = std::max(norm_a, frobenius_norm(a));
    norm_pinv = std::max(norm_pinv, frobenius_norm(ap));
  }

  const double tol = opt.algebra_tol;
  out.verdict("moore_penrose", mp <= tol, "max scaled Penrose defect " + fmt(mp) + " over " +
                                              std::to_string(opt.n_times) + " times");
  out.verdict("projectors", proj <= tol, "max projector identity defect " + fmt(proj));
  out.verdict("constant_p", drift_p <= 1e-8, "max |P(t) - P(0)| = " + fmt(drift_p));

  if (!prob.constants) {
    out.add("rank", CheckStatus::warn, "no declared constants; rank " + std::to_string(rank_lo) + ".." +
                                           std::to_string(rank_hi) + " not compared");
    return;
  }
  const ProblemConstants& c = *prob.constants;
  out.verdict("rank", rank_lo == c.rank_r && rank_hi == c.rank_r,
              "observed rank " + std::to_string(rank_lo) + ".." + std::to_string(rank_hi) + ", declared " +
                  std::to_string(c.rank_r));
  const bool sig_ok = c.rank_r == 0 || (sig_min >= c.sigma_lo * (1.0 - 1e-9) && sig_max <= c.sigma_hi * (1.0 + 1e-9));
  out.verdict("singular_values", sig_ok,
              "observed [" + fmt(sig_min) + ", " + fmt(sig_max) + "], declared [" + fmt(c.sigma_lo) + ", " +
                  fmt(c.sigma_hi) + "]");
  const double r = static_cast<double>(c.rank_r);
  const double a_bound = std::sqrt(r) * c.sigma_hi * (1.0 + 1e-9);
  const double pinv_bound = c.rank_r == 0 ? 0.0 : std::sqrt(r) / c.sigma_lo * (1.0 + 1e-9);
  out.verdict("norm_bounds", norm_a <= a_bound && norm_pinv <= pinv_bound,
              "sup|A| = " + fmt(norm_a) + " <= " + fmt(a_bound) + ", sup|A^-| = " + fmt(norm_pinv) +
                  " <= " + fmt(pinv_bound));
}

void check_pointwise(const SdaeProblem& prob, const CheckOptions& opt, Builder& out) {
  Sampler s(prob, opt.box_radius, opt.seed);
  double jac_err = 0.0, inv_norm = 0.0, noise = 0.0;
  bool singular = false;
  for (std::size_t i = 0; i < opt.n_points; ++i) {
    const double t = s.time();
    const Vector x = s.point();
    const Matrix j = prob.jacobian(t, x);
    const Matrix fd = finite_difference_jacobian(prob, t, x);
    jac_err = std::max(jac_err, frobenius_norm(j - fd) / (1.0 + frobenius_norm(j)));

    const ProjectorBundle b = projectors(prob.a_of_t(t));
    const Matrix jc = b.a + b.r_proj * j;
    try {
      inv_norm = std::max(inv_norm, frobenius_norm(solve_linear(jc, Matrix::identity(prob.d))));
    } catch (const SingularMatrixError&) {
      singular = true;
    }
    const Matrix g = prob.g_diffusion(t, x);
    noise = std::max(noise, frobenius_norm(b.r_proj * g) / (1.0 + frobenius_norm(g)));
  }

  if (!prob.f_jacobian) {
    out.add("jacobian", CheckStatus::warn, "no analytic Jacobian; central differences in use");
  } else {
    out.verdict("jacobian", jac_err <= opt.jacobian_rel_tol,
                "max relative finite-difference mismatch " + fmt(jac_err) + " over " +
                    std::to_string(opt.n_points) + " points");
  }
  out.verdict("noise_in_range", noise <= opt.algebra_tol, "max |R G| (scaled) " + fmt(noise));
  if (singular) {
    out.verdict("index1_jacobian", false, "A + R F' singular at a sampled point");
  } else if (prob.constants) {
    const double lj = prob.constants->jacobian_bound_lj;
    out.verdict("index1_jacobian", inv_norm <= lj * (1.0 + 1e-9),
                "max |(A + R F')^-1| = " + fmt(inv_norm) + ", declared L_J = " + fmt(lj));
  } else {
    out.add("index1_jacobian", CheckStatus::pass, "nonsingular at all samples, max inverse norm " + fmt(inv_norm));
  }

  if (prob.constants) {
    double ratio = 0.0;
    bool solve_failed = false;
    Sampler sv(prob, opt.box_radius, opt.seed + 1);
    for (std::size_t i = 0; i < opt.n_points; ++i) {
      const double t = sv.time();
      const Vector u = sv.point();
      const Vector w = sv.point();
      try {
        const Vector dv = subtract(solve_constraint(prob, t, u), solve_constraint(prob, t, w));
        ratio = std::max(ratio, norm2(dv) / norm2(subtract(u, w)));
      } catch (const ConstraintSolveError&) {
        solve_failed = true;
      }
    }
    const double lhat = prob.constants->lhat;
    out.verdict("vhat_lipschitz", !solve_failed && ratio <= lhat,
                solve_failed ? std::string("constraint solve failed at a sample")
                             : "max |V^(u) - V^(w)| / |u - w| = " + fmt(ratio) + " <= L^ = " + fmt(lhat));
  }
}

void check_assumptions(const SdaeProblem& prob, const CheckOptions& opt, Builder& out) {
  const ConsistencyCheck ic = check_initial_consistency(prob, 1e-8);
  out.verdict("initial_consistency", ic.passed, "|R F(0, x0)| = " + fmt(ic.residual_norm));

  if (!prob.constants) {
    out.add("assumptions", CheckStatus::warn, "no declared constants; probes and stepsize guard skipped");
    return;
  }
  const ProblemConstants& c = *prob.constants;
  out.verdict("moment_condition", c.moment_condition_holds(),
              "p1 = " + fmt(c.p1) + (c.moment_condition_holds() ? " > " : " <= ") + "4 gamma - 2 = " +
                  fmt(4.0 * c.gamma - 2.0));

  const AssumptionProbe probe = probe_assumptions(prob, opt.n_probe, opt.box_radius, opt.seed + 2);
  out.verdict("monotonicity_probe", probe.l1_estimate <= c.monotonicity_l1 * (1.0 + 1e-9) + 1e-12,
              "sampled sup " + fmt(probe.l1_estimate) + ", declared L1 = " + fmt(c.monotonicity_l1));

  if (c.coupling_l2) {
    out.verdict("coupling_probe", probe.l2_estimate <= *c.coupling_l2 * (1.0 + 1e-9) + 1e-12,
                "sampled sup " + fmt(probe.l2_estimate) + ", declared L2 = " + fmt(*c.coupling_l2));
  } else {
    const AssumptionProbe wide = probe_assumptions(prob, opt.n_probe, 4.0 * opt.box_radius, opt.seed + 2);
    std::string detail = "coupling probe unbounded: no L2 declared, sampled sup " + fmt(probe.l2_estimate) +
                         " at radius " + fmt(opt.box_radius) + ", " + fmt(wide.l2_estimate) + " at radius " +
                         fmt(4.0 * opt.box_radius);
    if (prob.constant_a) detail += "; constant A, so the constant-matrix convergence route applies";
    out.add("coupling_probe", CheckStatus::warn, detail);
  }

  std::size_t violations = 0;
  double bound = HUGE_VAL;
  for (double theta : opt.guard_thetas) {
    for (int level : opt.guard_levels) {
      const GuardVerdict g = stepsize_guard(prob, theta, std::ldexp(1.0, -level));
      bound = std::min(bound, g.bound);
      if (!g.ok) ++violations;
    }
  }
  const std::size_t total = opt.guard_thetas.size() * opt.guard_levels.size();
  out.add("stepsize_guard", violations == 0 ? CheckStatus::pass : CheckStatus::warn,
          std::to_string(violations) + " of " + std::to_string(total) +
              " (theta, dt) ladder pairs exceed the sufficient bound (smallest bound " + fmt(bound) +
              "); this is sufficient, not necessary");
}

}  // namespace

bool CheckReport::passed() const { return count(CheckStatus::fail) == 0; }

std::size_t CheckReport::count(CheckStatus s) const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [s](const CheckItem& i) {
    return i.status == s;
  }));
}

const CheckItem* CheckReport::find(const std::string& name) const {
  for (const auto& i : items) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

CheckReport run_problem_checks(const SdaeProblem& prob, const CheckOptions& options) {
  CheckReport report;
  report.problem_label = prob.label;
  Builder b(report);
  check_algebra(prob, options, b);
  check_pointwise(prob, options, b);
  check_assumptions(prob, options, b);
  return report;
}

void print_check_report(std::ostream& os, const CheckReport& report) {
  for (const auto& i : report.items) {
    const char* tag = i.status == CheckStatus::pass ? "[PASS]" : i.status == CheckStatus::warn ? "[WARN]" : "[FAIL]";
    os << tag << ' ' << i.name << ": " << i.detail << '\n';
  }
  os << report.problem_label << ": " << report.count(CheckStatus::pass) << " passed, "
     << report.count(CheckStatus::warn) << " warnings, " << report.count(CheckStatus::fail) << " failed\n";
}

}  // namespace sdae
