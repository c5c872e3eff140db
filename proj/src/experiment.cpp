#include "sdae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sdae/csv.hpp"
#include "sdae/paths.hpp"

namespace sdae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kConvergenceHeader = "problem,theta,delta_exp,delta,rms,n_paths,n_failed,seed";
constexpr const char* kDiagnosticsHeader = "problem,theta,delta_exp,p,t,moment";

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

unsigned resolve_workers(unsigned requested) { return requested == 0 ? default_workers() : requested; }

std::size_t steps_at(double horizon, int level) {
  const double k = std::ldexp(horizon, level);
  if (!(k >= 1.0) || k != std::floor(k)) {
    throw std::invalid_argument("horizon * 2^" + std::to_string(level) + " is not a positive integer");
  }
  return static_cast<std::size_t>(k);
}

ThetaConfig theta_config(double theta, int level, const RunOptions& opt) {
  ThetaConfig c;
  c.theta = theta;
  c.delta = std::ldexp(1.0, -level);
  c.newton = opt.newton;
  return c;
}

double distance(const Vector& a, const Vector& b) { return norm2(subtract(a, b)); }

double path_error(const Trajectory& ref, const Trajectory& coarse, MeasureAt at) {
  if (at == MeasureAt::terminal) return distance(ref.states.back(), coarse.states.back());
  const std::size_t stride = (ref.size() - 1) / (coarse.size() - 1);
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    worst = std::max(worst, distance(ref.states[k * stride], coarse.states[k]));
  }
  return worst;
}

double max_residual(const Trajectory& tr) {
  double m = 0.0;
  for (double r : tr.constraint_residuals) m = std::max(m, r);
  return m;
}

// Square errors per (theta, level) for one path; NaN marks a failure.
struct PathOutcome {
  std::vector<std::vector<double>> sq_err;
  std::vector<bool> reference_failed;
  std::vector<double> max_constraint;
};

struct Aggregate {
  double rms = kNaN;
  double stderr_ = 0.0;
  std::size_t n_failed = 0;
};

Aggregate aggregate(const std::vector<double>& sq) {
  Aggregate a;
  double sum = 0.0;
  std::size_t ok = 0;
  for (double e : sq) {
    if (std::isnan(e)) {
      ++a.n_failed;
    } else {
      sum += e;
      ++ok;
    }
  }
  if (ok == 0) return a;
  a.rms = std::sqrt(sum / static_cast<double>(ok));

  const std::size_t n_batches = std::min<std::size_t>(10, sq.size());
  std::vector<double> batch_rms;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * sq.size() / n_batches;
    const std::size_t hi = (b + 1) * sq.size() / n_batches;
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (!std::isnan(sq[i])) {
        s += sq[i];
        ++n;
      }
    }
    if (n > 0) batch_rms.push_back(std::sqrt(s / static_cast<double>(n)));
  }
  if (batch_rms.size() >= 2) {
    double mean = 0.0;
    for (double r : batch_rms) mean += r;
    mean /= static_cast<double>(batch_rms.size());
    double var = 0.0;
    for (double r : batch_rms) var += (r - mean) * (r - mean);
    var /= static_cast<double>(batch_rms.size() - 1);
    a.stderr_ = std::sqrt(var / static_cast<double>(batch_rms.size()));
  }
  return a;
}

std::string theta_tag(double theta) { return "theta=" + format_double(theta); }

std::string measure_name(MeasureAt m) { return m == MeasureAt::terminal ? "terminal" : "max_grid"; }

}  // namespace

unsigned default_workers() {
  if (const char* env = std::getenv("SDAE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (unsigned t = 0; t < w; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void ConvergenceConfig::validate() const {
  if (thetas.empty()) throw std::invalid_argument("at least one theta is required");
  for (double th : thetas) {
    if (!(th >= 0.5 && th <= 1.0)) throw std::invalid_argument("theta " + format_double(th) + " outside [1/2, 1]");
  }
  if (coarse_levels.empty()) throw std::invalid_argument("the level ladder is empty");
  for (int l : coarse_levels) {
    if (l < 0) throw std::invalid_argument("levels must be non-negative");
  }
  if (ref_level <= *std::max_element(coarse_levels.begin(), coarse_levels.end())) {
    throw std::invalid_argument("ref_level must exceed every coarse level");
  }
  if (ref_level > 30) throw std::invalid_argument("ref_level above 30 is not supported");
  if (n_paths < 2) throw std::invalid_argument("at least two paths are required");
}

std::size_t ConvergenceReport::total_failed() const {
  std::size_t n = 0;
  for (const auto& s : series) {
    for (const auto& p : s.points) n += p.n_failed;
  }
  return n;
}

ConvergenceReport run_convergence(const ConvergenceConfig& cfg) {
  return run_convergence(builtin(cfg.problem_label), cfg);
}

ConvergenceReport run_convergence(const SdaeProblem& prob, const ConvergenceConfig& cfg) {
  cfg.validate();
  ConvergenceReport report;
  report.problem_label = prob.label;
  report.seed = cfg.seed;
  report.generator_id = std::string(kGeneratorId);
  report.started_at = utc_now();
  report.ref_level = cfg.ref_level;
  report.measure_at = cfg.options.measure_at;

  const std::size_t n_theta = cfg.thetas.size();
  const std::size_t n_level = cfg.coarse_levels.size();
  const std::size_t ref_steps = steps_at(prob.horizon, cfg.ref_level);

  std::vector<ThetaIntegrator> ref_int;
  std::vector<std::vector<ThetaIntegrator>> coarse_int(n_theta);
  for (std::size_t a = 0; a < n_theta; ++a) {
    ref_int.emplace_back(prob, theta_config(cfg.thetas[a], cfg.ref_level, cfg.options), ref_steps);
    for (int level : cfg.coarse_levels) {
      coarse_int[a].emplace_back(prob, theta_config(cfg.thetas[a], level, cfg.options),
                                 steps_at(prob.horizon, level));
    }
  }

  std::vector<PathOutcome> outcomes(cfg.n_paths);
  parallel_for(cfg.n_paths, resolve_workers(cfg.options.workers), [&](std::size_t i) {
    std::vector<Vector> fine = cfg.options.no_noise
                                   ? zero_increments(ref_steps, prob.m)
                                   : std::move(generate(cfg.seed, prob.m, cfg.ref_level, prob.horizon, i).increments);
    std::vector<std::vector<Vector>> coarse(n_level);
    {
      std::vector<Vector> cur = fine;
      for (int l = cfg.ref_level - 1; l >= 0; --l) {
        cur = pairwise_sum(cur);
        for (std::size_t j = 0; j < n_level; ++j) {
          if (cfg.coarse_levels[j] == l) coarse[j] = cur;
        }
        if (l <= *std::min_element(cfg.coarse_levels.begin(), cfg.coarse_levels.end())) break;
      }
    }

    PathOutcome& out = outcomes[i];
    out.sq_err.assign(n_theta, std::vector<double>(n_level, kNaN));
    out.reference_failed.assign(n_theta, false);
    out.max_constraint.assign(n_theta, 0.0);
    for (std::size_t a = 0; a < n_theta; ++a) {
      const IntegrationResult ref = ref_int[a].integrate(fine);
      if (!ref.ok()) {
        out.reference_failed[a] = true;
        continue;
      }
      out.max_constraint[a] = max_residual(ref.trajectory);
      for (std::size_t j = 0; j < n_level; ++j) {
        const IntegrationResult c = coarse_int[a][j].integrate(coarse[j]);
        if (!c.ok()) continue;
        out.max_constraint[a] = std::max(out.max_constraint[a], max_residual(c.trajectory));
        const double e = path_error(ref.trajectory, c.trajectory, cfg.options.measure_at);
        out.sq_err[a][j] = e * e;
      }
    }
  });

  for (std::size_t a = 0; a < n_theta; ++a) {
    ThetaSeries s;
    s.theta = cfg.thetas[a];
    for (const auto& o : outcomes) {
      if (o.reference_failed[a]) ++s.reference_failures;
      s.max_constraint_residual = std::max(s.max_constraint_residual, o.max_constraint[a]);
    }
    std::vector<std::pair<double, double>> fit_points;
    for (std::size_t j = 0; j < n_level; ++j) {
      std::vector<double> sq(cfg.n_paths);
      for (std::size_t i = 0; i < cfg.n_paths; ++i) sq[i] = outcomes[i].sq_err[a][j];
      const Aggregate agg = aggregate(sq);
      ErrorPoint pt;
      pt.delta_exp = cfg.coarse_levels[j];
      pt.delta = std::ldexp(1.0, -pt.delta_exp);
      pt.rms = agg.rms;
      pt.rms_stderr = agg.stderr_;
      pt.n_paths = cfg.n_paths;
      pt.n_failed = agg.n_failed;
      if (std::isnan(pt.rms)) report.partial = true;
      if (std::isfinite(pt.rms) && pt.rms > 0.0) fit_points.emplace_back(pt.delta, pt.rms);
      s.points.push_back(pt);
    }
    if (fit_points.size() >= 2) {
      const SlopeFit f = fit_slope(fit_points);
      s.slope = f.slope;
      s.intercept = f.intercept;
      s.fit_ok = true;
    } else {
      s.slope = s.intercept = kNaN;
      report.notes.push_back(theta_tag(s.theta) + ": fewer than two usable points, no slope fitted");
    }

    std::size_t failed = 0;
    for (const auto& pt : s.points) failed += pt.n_failed;
    if (failed > 0) {
      report.notes.push_back(theta_tag(s.theta) + ": " + std::to_string(failed) +
                             " failed (path, level) runs excluded from the RMS, " +
                             std::to_string(s.reference_failures) + " reference failures");
    }
    if (s.fit_ok && s.slope > 0.75) {
      report.notes.push_back(theta_tag(s.theta) + ": observed order " + format_double(s.slope) +
                             " exceeds the proven order 1/2");
    }
    int guard_violations = 0;
    for (int level : cfg.coarse_levels) {
      const GuardVerdict g = stepsize_guard(prob, s.theta, std::ldexp(1.0, -level));
      if (!g.skipped && !g.ok) ++guard_violations;
    }
    if (guard_violations > 0) {
      report.notes.push_back(theta_tag(s.theta) + ": " + std::to_string(guard_violations) +
                             " ladder steps exceed the sufficient stepsize bound");
    }
    report.series.push_back(std::move(s));
  }
  report.finished_at = utc_now();
  return report;
}

StrongError strong_error(const SdaeProblem& prob, double theta, int level, int ref_level, std::size_t n_paths,
                         std::uint64_t seed, const RunOptions& options) {
  if (level >= ref_level) throw std::invalid_argument("strong_error: level must be below ref_level");
  if (n_paths == 0) throw std::invalid_argument("strong_error: at least one path is required");
  const std::size_t ref_steps = steps_at(prob.horizon, ref_level);
  const ThetaIntegrator ref_int(prob, theta_config(theta, ref_level, options), ref_steps);
  const ThetaIntegrator coarse_int(prob, theta_config(theta, level, options), steps_at(prob.horizon, level));
  std::vector<double> sq(n_paths, kNaN);
  std::vector<double> cres(n_paths, 0.0);
  parallel_for(n_paths, resolve_workers(options.workers), [&](std::size_t i) {
    std::vector<Vector> fine = options.no_noise ? zero_increments(ref_steps, prob.m)
                                                : std::move(generate(seed, prob.m, ref_level, prob.horizon, i).increments);
    std::vector<Vector> coarse = fine;
    for (int l = ref_level; l > level; --l) coarse = pairwise_sum(coarse);
    const IntegrationResult ref = ref_int.integrate(fine);
    if (!ref.ok()) return;
    const IntegrationResult c = coarse_int.integrate(coarse);
    if (!c.ok()) return;
    const double e = path_error(ref.trajectory, c.trajectory, options.measure_at);
    sq[i] = e * e;
    cres[i] = std::max(max_residual(ref.trajectory), max_residual(c.trajectory));
  });
  const Aggregate agg = aggregate(sq);
  if (std::isnan(agg.rms)) throw std::runtime_error("strong_error: all paths failed");
  StrongError out;
  out.rms = agg.rms;
  out.n_failed = agg.n_failed;
  for (double r : cres) out.max_constraint_residual = std::max(out.max_constraint_residual, r);
  return out;
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_slope: at least two points are required");
  double sx = 0.0, sy = 0.0;
  for (const auto& [delta, rms] : points) {
    if (!(delta > 0.0)) throw std::invalid_argument("fit_slope: step sizes must be positive");
    if (!(rms > 0.0) || !std::isfinite(rms)) throw std::invalid_argument("fit_slope: rms values must be positive");
    sx += std::log2(delta);
    sy += std::log2(rms);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [delta, rms] : points) {
    const double dx = std::log2(delta) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(rms) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_slope: step sizes must not all coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << kConvergenceHeader << '\n';
  for (const auto& s : report.series) {
    for (const auto& pt : s.points) {
      os << report.problem_label << ',' << format_double(s.theta) << ',' << pt.delta_exp << ','
         << format_double(pt.delta) << ',' << format_double(pt.rms) << ',' << pt.n_paths << ',' << pt.n_failed
         << ',' << report.seed << '\n';
    }
  }
  for (const auto& s : report.series) {
    os << "#slope," << format_double(s.theta) << ',' << format_double(s.slope) << '\n';
    os << "#intercept," << format_double(s.theta) << ',' << format_double(s.intercept) << '\n';
  }
}

void write_convergence_metadata(std::ostream& os, const ConvergenceReport& report) {
  nlohmann::ordered_json j;
  j["problem"] = report.problem_label;
  j["seed"] = report.seed;
  j["generator"] = report.generator_id;
  j["started_at"] = report.started_at;
  j["finished_at"] = report.finished_at;
  j["ref_level"] = report.ref_level;
  j["measure_at"] = measure_name(report.measure_at);
  j["partial"] = report.partial;
  j["notes"] = report.notes;
  auto& series = j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : report.series) {
    nlohmann::ordered_json js;
    js["theta"] = s.theta;
    js["slope"] = s.fit_ok ? nlohmann::ordered_json(s.slope) : nlohmann::ordered_json(nullptr);
    js["intercept"] = s.fit_ok ? nlohmann::ordered_json(s.intercept) : nlohmann::ordered_json(nullptr);
    js["max_constraint_residual"] = s.max_constraint_residual;
    js["reference_failures"] = s.reference_failures;
    auto& pts = js["points"] = nlohmann::ordered_json::array();
    for (const auto& pt : s.points) {
      pts.push_back({{"delta_exp", pt.delta_exp},
                     {"rms", std::isfinite(pt.rms) ? nlohmann::ordered_json(pt.rms) : nlohmann::ordered_json(nullptr)},
                     {"rms_stderr", pt.rms_stderr},
                     {"n_failed", pt.n_failed}});
    }
    series.push_back(std::move(js));
  }
  os << j.dump(2) << '\n';
}

ConvergenceTable read_convergence_csv(std::istream& is) {
  ConvergenceTable table;
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    return std::runtime_error("line " + std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(is, line)) throw std::runtime_error("empty convergence CSV");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kConvergenceHeader) throw bad("unexpected header '" + line + "'");

  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    try {
      if (f[0] == "#slope" || f[0] == "#intercept") {
        if (f.size() != 3) throw bad("expected 3 fields");
        auto& dst = f[0] == "#slope" ? table.slopes : table.intercepts;
        dst[parse_double(f[1])] = parse_double(f[2]);
        continue;
      }
      if (f.size() != 8) throw bad("expected 8 fields");
      ConvergenceRow r;
      r.problem = f[0];
      r.theta = parse_double(f[1]);
      r.delta_exp = std::stoi(f[2]);
      r.delta = parse_double(f[3]);
      r.rms = parse_double(f[4]);
      r.n_paths = std::stoull(f[5]);
      r.n_failed = std::stoull(f[6]);
      r.seed = std::stoull(f[7]);
      table.rows.push_back(std::move(r));
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception& e) {
      throw bad(e.what());
    }
  }
  return table;
}

std::map<double, SlopeFit> refit(const ConvergenceTable& table) {
  std::map<double, std::vector<std::pair<double, double>>> by_theta;
  for (const auto& r : table.rows) {
    auto& pts = by_theta[r.theta];
    if (std::isfinite(r.rms) && r.rms > 0.0) pts.emplace_back(r.delta, r.rms);
  }
  std::map<double, SlopeFit> out;
  for (const auto& [theta, pts] : by_theta) {
    if (pts.size() >= 2) out[theta] = fit_slope(pts);
  }
  return out;
}

DiagnosticsReport diagnostics(const SdaeProblem& prob, double theta, int level, std::size_t n_paths,
                              std::uint64_t seed, int p, const RunOptions& options) {
  if (p < 2 || p % 2 != 0) throw std::invalid_argument("diagnostics: p must be an even integer >= 2");
  if (prob.constants && !(p < prob.constants->p1)) {
    throw std::invalid_argument("diagnostics: p must be below the declared p1 = " +
                                format_double(prob.constants->p1));
  }
  if (n_paths == 0) throw std::invalid_argument("diagnostics: at least one path is required");
  const std::size_t steps = steps_at(prob.horizon, level);
  const std::vector<std::size_t> lag_steps{1, 2, 4, 8};
  if (steps < 16) throw std::invalid_argument("diagnostics: at least 16 steps are required");

  const ThetaIntegrator integ(prob, theta_config(theta, level, options), steps);
  struct PathStats {
    bool ok = false;
    std::vector<double> moments;
    std::vector<double> mean_sq;
  };
  std::vector<PathStats> stats(n_paths);
  parallel_for(n_paths, resolve_workers(options.workers), [&](std::size_t i) {
    const std::vector<Vector> inc = options.no_noise ? zero_increments(steps, prob.m)
                                                     : generate(seed, prob.m, level, prob.horizon, i).increments;
    const IntegrationResult r = integ.integrate(inc);
    if (!r.ok()) return;
    const auto& xs = r.trajectory.states;
    PathStats& s = stats[i];
    s.ok = true;
    s.moments.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) s.moments[k] = std::pow(norm2(xs[k]), p);
    for (std::size_t lag : lag_steps) {
      double acc = 0.0;
      for (std::size_t k = 0; k + lag < xs.size(); ++k) {
        const double dist = distance(xs[k + lag], xs[k]);
        acc += dist * dist;
      }
      s.mean_sq.push_back(acc / static_cast<double>(xs.size() - lag));
    }
  });

  DiagnosticsReport rep;
  rep.problem_label = prob.label;
  rep.theta = theta;
  rep.level = level;
  rep.p = p;
  rep.n_paths = n_paths;
  const double dt = std::ldexp(1.0, -level);
  for (std::size_t k = 0; k <= steps; ++k) rep.times.push_back(static_cast<double>(k) * dt);
  rep.moments.assign(steps + 1, 0.0);
  rep.mean_sq_increment.assign(lag_steps.size(), 0.0);
  std::size_t ok = 0;
  for (const auto& s : stats) {
    if (!s.ok) {
      ++rep.n_failed;
      continue;
    }
    ++ok;
    for (std::size_t k = 0; k <= steps; ++k) rep.moments[k] += s.moments[k];
    for (std::size_t j = 0; j < lag_steps.size(); ++j) rep.mean_sq_increment[j] += s.mean_sq[j];
  }
  for (std::size_t j = 0; j < lag_steps.size(); ++j) rep.lags.push_back(static_cast<double>(lag_steps[j]) * dt);
  if (ok == 0) {
    std::fill(rep.moments.begin(), rep.moments.end(), kNaN);
    std::fill(rep.mean_sq_increment.begin(), rep.mean_sq_increment.end(), kNaN);
    rep.holder_slope = kNaN;
    return rep;
  }
  for (double& m : rep.moments) m /= static_cast<double>(ok);
  for (double& m : rep.mean_sq_increment) m /= static_cast<double>(ok);

  std::vector<std::pair<double, double>> pts;
  for (std::size_t j = 0; j < lag_steps.size(); ++j) {
    if (rep.mean_sq_increment[j] > 0.0) pts.emplace_back(rep.lags[j], rep.mean_sq_increment[j]);
  }
  rep.holder_slope = pts.size() >= 2 ? fit_slope(pts).slope : kNaN;
  return rep;
}

void write_diagnostics_csv(std::ostream& os, const DiagnosticsReport& r) {
  os << kDiagnosticsHeader << '\n';
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    os << r.problem_label << ',' << format_double(r.theta) << ',' << r.level << ',' << r.p << ','
       << format_double(r.times[k]) << ',' << format_double(r.moments[k]) << '\n';
  }
  for (std::size_t j = 0; j < r.lags.size(); ++j) {
    os << "#lag," << format_double(r.lags[j]) << ',' << format_double(r.mean_sq_increment[j]) << '\n';
  }
  os << "#holder_slope," << format_double(r.holder_slope) << '\n';
}

}  // namespace sdae
