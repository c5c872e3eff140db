#pragma once

// Monte Carlo strong-error study of the theta method and statistical
// diagnostics of the approximate solution.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdae/problem.hpp"
#include "sdae/stepper.hpp"

namespace sdae {

/// Worker count from SDAE_WORKERS when set to a positive integer, otherwise
/// std::thread::hardware_concurrency() (at least 1).
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by a body is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

enum class MeasureAt { terminal, max_grid };

struct RunOptions {
  MeasureAt measure_at = MeasureAt::terminal;
  NewtonConfig newton;
  bool no_noise = false;
  unsigned workers = 0;  // 0: default_workers()
};

struct ConvergenceConfig {
  std::string problem_label;
  std::vector<double> thetas{0.5, 0.75, 1.0};
  int ref_level = 13;
  std::vector<int> coarse_levels{6, 7, 8, 9, 10, 11};
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  RunOptions options;

  /// Throws std::invalid_argument on an empty or out-of-range ladder,
  /// thetas outside [1/2, 1] or fewer than two paths.
  void validate() const;
};

struct ErrorPoint {
  int delta_exp = 0;
  double delta = 0.0;
  double rms = 0.0;         // NaN when every path failed
  double rms_stderr = 0.0;  // spread of 10 batch estimates
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
};

struct ThetaSeries {
  double theta = 1.0;
  std::vector<ErrorPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  bool fit_ok = false;
  double max_constraint_residual = 0.0;
  std::size_t reference_failures = 0;
};

struct ConvergenceReport {
  std::string problem_label;
  std::uint64_t seed = 0;
  std::string generator_id;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
  int ref_level = 0;
  MeasureAt measure_at = MeasureAt::terminal;
  std::vector<ThetaSeries> series;
  std::vector<std::string> notes;
  bool partial = false;  // some (theta, level) had no successful path

  std::size_t total_failed() const;
};

struct StrongError {
  double rms = 0.0;
  std::size_t n_failed = 0;
  double max_constraint_residual = 0.0;
};

/// RMS over successful paths of the error between the level and ref_level
/// solutions driven by the same Brownian lattice (path i uses stream i).
/// Throws std::runtime_error when every path fails.
StrongError strong_error(const SdaeProblem& prob, double theta, int level, int ref_level, std::size_t n_paths,
                         std::uint64_t seed, const RunOptions& options = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares of log2(rms) against log2(delta). Requires at least two
/// points with distinct delta and rms > 0; throws std::invalid_argument.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

/// Full ladder for every theta on shared lattices. Deterministic given the
/// configuration, independent of the worker count.
ConvergenceReport run_convergence(const ConvergenceConfig& cfg);
ConvergenceReport run_convergence(const SdaeProblem& prob, const ConvergenceConfig& cfg);

/// CSV: `problem,theta,delta_exp,delta,rms,n_paths,n_failed,seed`, one row
/// per (theta, level), then `#slope,theta,v` and `#intercept,theta,v` per
/// theta. Floats at 17 significant digits.
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

/// Seed, generator, timestamps, notes and standard errors as JSON.
void write_convergence_metadata(std::ostream& os, const ConvergenceReport& report);

struct ConvergenceRow {
  std::string problem;
  double theta = 0.0;
  int delta_exp = 0;
  double delta = 0.0;
  double rms = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
  std::uint64_t seed = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::map<double, double> slopes;  // by theta, as embedded in the file
  std::map<double, double> intercepts;
};

/// Parses write_convergence_csv output; throws std::runtime_error naming the
/// offending line.
ConvergenceTable read_convergence_csv(std::istream& is);

/// fit_slope per theta over the rows with finite positive rms.
std::map<double, SlopeFit> refit(const ConvergenceTable& table);

struct DiagnosticsReport {
  std::string problem_label;
  double theta = 1.0;
  int level = 0;
  int p = 2;
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
  std::vector<double> times;
  std::vector<double> moments;  // mean of |X_t|^p over successful paths
  std::vector<double> lags;
  std::vector<double> mean_sq_increment;  // mean of |X_{t+lag} - X_t|^2 over paths and t
  double holder_slope = 0.0;              // fit of log2 mean_sq against log2 lag
};

/// Moment curve and Hoelder regression at lags {1, 2, 4, 8} steps from
/// trajectories at step 2^-level. Requires an even p >= 2 below the declared
/// p1 (when constants exist) and at least 16 steps.
DiagnosticsReport diagnostics(const SdaeProblem& prob, double theta, int level, std::size_t n_paths,
                              std::uint64_t seed, int p, const RunOptions& options = {});

/// `problem,theta,delta_exp,p,t,moment` rows, then `#lag,<lag>,<mean_sq>`
/// rows and a `#holder_slope,<v>` row.
void write_diagnostics_csv(std::ostream& os, const DiagnosticsReport& report);

}  // namespace sdae
