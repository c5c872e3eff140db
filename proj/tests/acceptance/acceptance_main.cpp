// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/linalg_properties.hpp"
#include "sdae/experiment.hpp"
#include "sdae/inherent.hpp"
#include "sdae/paths.hpp"

using sdae::Vector;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Ladder {
  sdae::ConvergenceReport report;
  double seconds = 0.0;
};

Ladder ladder(const std::string& label, std::vector<double> thetas, int hi, std::size_t paths, std::uint64_t seed) {
  sdae::ConvergenceConfig c;
  c.problem_label = label;
  c.thetas = std::move(thetas);
  c.ref_level = 13;
  c.coarse_levels.clear();
  for (int l = 6; l <= hi; ++l) c.coarse_levels.push_back(l);
  c.n_paths = paths;
  c.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  Ladder out{sdae::run_convergence(c), 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

bool slopes_within(const sdae::ConvergenceReport& r, double lo, double hi, std::string& detail) {
  bool ok = true;
  for (const auto& s : r.series) {
    detail += "theta=" + fmt(s.theta) + " slope=" + fmt(s.slope) + " ";
    ok = ok && s.fit_ok && s.slope >= lo && s.slope <= hi;
  }
  return ok;
}

double max_residual(const sdae::ConvergenceReport& r) {
  double m = 0.0;
  for (const auto& s : r.series) m = std::max(m, s.max_constraint_residual);
  return m;
}

bool has_note(const sdae::ConvergenceReport& r, const std::string& text) {
  return std::any_of(r.notes.begin(), r.notes.end(),
                     [&](const std::string& n) { return n.find(text) != std::string::npos; });
}

void order_criterion(const std::string& name, const Ladder& full, const Ladder& ci, double lo, double hi,
                     double ci_lo, double ci_hi, std::vector<double>& residuals) {
  std::string d;
  bool ok = slopes_within(full.report, lo, hi, d);
  d += "failed=" + std::to_string(full.report.total_failed()) + " time=" + fmt(full.seconds) + "s; ci: ";
  ok = ok && full.report.total_failed() == 0;
  ok = slopes_within(ci.report, ci_lo, ci_hi, d) && ok;
  ok = ok && ci.report.total_failed() == 0;
  report(name, ok, d);
  residuals.push_back(max_residual(full.report));
  residuals.push_back(max_residual(ci.report));
}

double dedicated_constraint_run(const std::string& label) {
  const auto p = sdae::builtin(label);
  double worst = 0.0;
  for (double theta : {0.5, 0.75, 1.0}) {
    sdae::ThetaConfig c;
    c.theta = theta;
    c.delta = std::ldexp(1.0, -11);
    c.newton.tol = 1e-8;
    const sdae::ThetaIntegrator integ(p, c, std::size_t{1} << 11);
    for (std::size_t i = 0; i < 100; ++i) {
      const auto lat = sdae::generate(11, p.m, 11, p.horizon, i);
      const auto r = integ.integrate(lat.increments);
      if (!r.ok()) return INFINITY;
      for (double v : r.trajectory.constraint_residuals) worst = std::max(worst, v);
    }
  }
  return worst;
}

struct Decoupling {
  double rms_diff = 0.0, rms_stm = 0.0, rms_inh = 0.0, max_residual = 0.0;
  bool ok = true;
};

Decoupling decoupling(const std::string& label) {
  const auto p = sdae::builtin(label);
  sdae::ThetaConfig fine, coarse;
  fine.delta = std::ldexp(1.0, -13);
  coarse.delta = std::ldexp(1.0, -10);
  const sdae::ThetaIntegrator ref_integ(p, fine, std::size_t{1} << 13), stm_integ(p, coarse, std::size_t{1} << 10);
  Decoupling out;
  const std::size_t n = 200;
  for (std::size_t i = 0; i < n; ++i) {
    const auto lat = sdae::generate(21, p.m, 13, p.horizon, i);
    const auto inc = sdae::coarsen(lat, 10);
    const auto ref = ref_integ.integrate(lat.increments);
    const auto a = stm_integ.integrate(inc);
    const auto b = sdae::integrate_inherent(p, coarse, inc);
    if (!ref.ok() || !a.ok() || !b.ok()) {
      out.ok = false;
      continue;
    }
    const Vector& xr = ref.trajectory.states.back();
    out.rms_stm += std::pow(sdae::norm2(sdae::subtract(a.trajectory.states.back(), xr)), 2);
    out.rms_inh += std::pow(sdae::norm2(sdae::subtract(b.trajectory.states.back(), xr)), 2);
    out.rms_diff += std::pow(sdae::norm2(sdae::subtract(a.trajectory.states.back(), b.trajectory.states.back())), 2);
    for (double v : a.trajectory.constraint_residuals) out.max_residual = std::max(out.max_residual, v);
  }
  out.rms_stm = std::sqrt(out.rms_stm / n);
  out.rms_inh = std::sqrt(out.rms_inh / n);
  out.rms_diff = std::sqrt(out.rms_diff / n);
  return out;
}

void linear_algebra_suite() {
  std::mt19937_64 rng(20240611);
  double penrose = 0.0, projector = 0.0;
  bool ranks_ok = true;
  std::size_t count = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + i % 5;
    const std::size_t r = (i / 5) % (d + 1);
    const auto defects = props::defects(props::random_rank_matrix(rng, d, r));
    penrose = std::max(penrose, defects.penrose);
    projector = std::max(projector, defects.projector);
    ranks_ok = ranks_ok && defects.rank == r;
    ++count;
  }
  for (const char* label : {"example51", "example52"}) {
    const auto p = sdae::builtin(label);
    for (int k = 0; k < 50; ++k) {
      const double t = p.horizon * k / 49.0;
      const auto defects = props::defects(p.a_of_t(t));
      penrose = std::max(penrose, defects.penrose);
      projector = std::max(projector, defects.projector);
      ranks_ok = ranks_ok && defects.rank == p.constants->rank_r;
      ++count;
    }
  }
  report("linear_algebra_properties", penrose <= 1e-10 && projector <= 1e-10 && ranks_ok,
         std::to_string(count) + " matrices, penrose=" + fmt(penrose) + " projector=" + fmt(projector) +
             " ranks=" + (ranks_ok ? "ok" : "wrong"));
}

void closed_forms() {
  const auto p = sdae::builtin("linear_sanity");
  double worst = 0.0;
  for (double theta : {0.5, 0.75, 1.0}) {
    for (int level : {2, 5, 8}) {
      sdae::ThetaConfig c;
      c.theta = theta;
      c.delta = std::ldexp(1.0, -level);
      const auto r = sdae::integrate(p, c, sdae::zero_increments(std::size_t{1} << level, 1));
      if (!r.ok()) {
        worst = INFINITY;
        continue;
      }
      const double factor = (1.0 - (1.0 - theta) * c.delta) / (1.0 + theta * c.delta);
      for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        worst = std::max(worst, std::abs(r.trajectory.states[k][0] - std::pow(factor, static_cast<double>(k))));
      }
    }
  }
  double fit_err = 0.0;
  for (double q : {0.5, 1.0, 0.6264}) {
    std::vector<std::pair<double, double>> pts;
    for (int l = 6; l <= 11; ++l) pts.emplace_back(std::ldexp(1.0, -l), 0.37 * std::pow(std::ldexp(1.0, -l), q));
    fit_err = std::max(fit_err, std::abs(sdae::fit_slope(pts).slope - q));
  }
  report("closed_forms", worst <= 1e-10 && fit_err <= 1e-12,
         "linear_sanity max error=" + fmt(worst) + " fit_slope max error=" + fmt(fit_err));
}

void statistical_diagnostics() {
  const auto h = sdae::diagnostics(sdae::builtin("example51"), 1.0, 10, 200, 31, 2);
  const auto m = sdae::diagnostics(sdae::builtin("example52"), 1.0, 10, 200, 32, 4);
  bool finite = m.n_failed == 0;
  double peak = 0.0;
  for (double v : m.moments) {
    finite = finite && std::isfinite(v);
    peak = std::max(peak, v);
  }
  const double bound = 100.0 * m.moments.front() + 100.0;
  const bool ok = h.n_failed == 0 && h.holder_slope >= 0.8 && h.holder_slope <= 1.2 && finite && peak <= bound;
  report("statistical_diagnostics", ok,
         "example51 holder_slope=" + fmt(h.holder_slope) + "; example52 max E|X|^4=" + fmt(peak) +
             " (bound " + fmt(bound) + ")");
}

}  // namespace

int main() {
  linear_algebra_suite();
  closed_forms();
  statistical_diagnostics();

  std::vector<double> residuals;
  const std::vector<double> thetas{0.5, 0.75, 1.0};
  {
    const auto full = ladder("example51", thetas, 11, 1000, 1);
    const auto ci = ladder("example51", thetas, 10, 200, 2);
    order_criterion("example51_order", full, ci, 0.45, 0.85, 0.4, 0.9, residuals);
  }
  {
    const auto full = ladder("example52", thetas, 11, 1000, 1);
    const auto ci = ladder("example52", thetas, 10, 200, 2);
    std::vector<double> r;
    std::string d;
    bool ok = slopes_within(full.report, 0.8, 1.2, d);
    ok = ok && full.report.total_failed() == 0;
    const bool noted = has_note(full.report, "exceeds the proven order 1/2");
    d += "failed=" + std::to_string(full.report.total_failed()) + " time=" + fmt(full.seconds) +
         "s note=" + (noted ? "present" : "missing") + "; ci: ";
    ok = slopes_within(ci.report, 0.8, 1.2, d) && ok && noted && ci.report.total_failed() == 0;
    report("example52_order", ok, d);
    residuals.push_back(max_residual(full.report));
    residuals.push_back(max_residual(ci.report));
  }
  {
    const auto run = ladder("remark31", {1.0}, 10, 500, 3);
    const auto& s = run.report.series.front();
    report("constant_a_order", s.fit_ok && s.slope >= 0.45 && run.report.total_failed() == 0,
           "slope=" + fmt(s.slope) + " failed=" + std::to_string(run.report.total_failed()));
    residuals.push_back(max_residual(run.report));
  }

  const auto d51 = decoupling("example51");
  const auto d52 = decoupling("example52");
  residuals.push_back(d51.max_residual);
  residuals.push_back(d52.max_residual);

  const double ladder_max = *std::max_element(residuals.begin(), residuals.end());
  const double tight = std::max(dedicated_constraint_run("example51"), dedicated_constraint_run("example52"));
  report("constraint_preservation", ladder_max <= 1e-3 && tight <= 1e-6,
         "max over runs=" + fmt(ladder_max) + " level-11 tol-1e-8 run=" + fmt(tight));

  std::string d;
  bool ok = true;
  for (const auto& [label, x] : {std::pair{"example51", d51}, std::pair{"example52", d52}}) {
    const double bound = 3.0 * std::max(x.rms_stm, x.rms_inh);
    ok = ok && x.ok && x.rms_diff <= bound;
    d += std::string(label) + " diff=" + fmt(x.rms_diff) + " stm=" + fmt(x.rms_stm) + " inherent=" +
         fmt(x.rms_inh) + (x.ok ? "" : " (failed paths)") + "; ";
  }
  report("decoupling_equivalence", ok, d);

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
