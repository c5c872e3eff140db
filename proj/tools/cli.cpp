#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "sdae/checks.hpp"
#include "sdae/csv.hpp"
#include "sdae/experiment.hpp"
#include "sdae/inherent.hpp"
#include "sdae/paths.hpp"
#include "sdae/problem.hpp"
#include "sdae/stepper.hpp"

namespace sdae::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int to_int(const std::string& s) {
  std::size_t pos = 0;
  const int v = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

SdaeProblem load_problem(const std::string& label) {
  try {
    return builtin(label);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// Writes to the named file, or to `fallback` when the name is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
    if (!to_stdout()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw UsageError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return to_stdout() ? fallback_ : file_; }
  bool to_stdout() const { return path_.empty() || path_ == "-"; }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ofstream file_;
};

struct CommonRun {
  unsigned workers = 0;
  double newton_tol = NewtonConfig{}.tol;
  bool no_noise = false;

  RunOptions options() const {
    RunOptions o;
    o.workers = workers;
    o.newton.tol = newton_tol;
    o.no_noise = no_noise;
    return o;
  }
};

void add_common(CLI::App* sub, CommonRun& c) {
  sub->add_option("--workers", c.workers, "Worker threads (default: SDAE_WORKERS or all cores)");
  sub->add_option("--newton-tol", c.newton_tol, "Newton correction tolerance")->check(CLI::PositiveNumber);
  sub->add_flag("--no-noise", c.no_noise, "Zero Brownian increments (debug)");
}

int cmd_convergence(const std::string& problem, const std::string& thetas, int ref_level, const std::string& levels,
                    std::size_t paths, std::uint64_t seed, const std::string& measure, const std::string& out_path,
                    const CommonRun& common, std::ostream& out, std::ostream& err) {
  ConvergenceConfig cfg;
  const SdaeProblem prob = load_problem(problem);
  cfg.problem_label = problem;
  try {
    cfg.thetas = parse_doubles(thetas);
    cfg.coarse_levels = parse_levels(levels);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  cfg.ref_level = ref_level;
  cfg.n_paths = paths;
  cfg.seed = seed;
  cfg.options = common.options();
  cfg.options.measure_at = measure == "max" ? MeasureAt::max_grid : MeasureAt::terminal;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const ConvergenceReport report = run_convergence(prob, cfg);
  Sink sink(out_path, out);
  write_convergence_csv(sink.stream(), report);
  if (!sink.to_stdout()) {
    std::ofstream meta(out_path + ".meta.json");
    write_convergence_metadata(meta, report);
  }
  for (const auto& s : report.series) {
    err << "theta=" << format_double(s.theta) << " slope=" << format_double(s.slope)
        << " max_constraint_residual=" << format_double(s.max_constraint_residual) << '\n';
  }
  for (const auto& n : report.notes) err << "note: " << n << '\n';
  if (report.total_failed() > 0) {
    err << "error: " << report.total_failed() << " failed path runs\n";
    return 2;
  }
  return 0;
}

int cmd_simulate(const std::string& problem, double theta, int level, std::uint64_t seed, std::uint64_t stream,
                 const std::string& method, const std::string& out_path, const CommonRun& common, std::ostream& out,
                 std::ostream& err) {
  const SdaeProblem prob = load_problem(problem);
  ThetaConfig cfg;
  cfg.theta = theta;
  cfg.delta = std::ldexp(1.0, -level);
  cfg.newton.tol = common.newton_tol;
  std::vector<Vector> inc;
  try {
    cfg.validate(prob.horizon);
    inc = common.no_noise ? zero_increments(generate(seed, prob.m, level, prob.horizon, stream).count(), prob.m)
                          : generate(seed, prob.m, level, prob.horizon, stream).increments;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const IntegrationResult r = method == "inherent" ? integrate_inherent(prob, cfg, inc) : integrate(prob, cfg, inc);
  Sink sink(out_path, out);
  write_trajectory_csv(sink.stream(), r.trajectory);
  if (!r.ok()) {
    err << "error: " << r.failure << '\n';
    return 2;
  }
  return 0;
}

int cmd_check(const std::string& problem, std::optional<double> perturb, std::ostream& out) {
  SdaeProblem prob = load_problem(problem);
  if (perturb) {
    const double eps = *perturb;
    const SdaeProblem original = prob;
    prob.f_jacobian = [original, eps](double t, const Vector& x) {
      Matrix j = original.jacobian(t, x);
      for (double& v : j.entries()) v += eps;
      return j;
    };
  }
  const CheckReport report = run_problem_checks(prob);
  print_check_report(out, report);
  return report.passed() ? 0 : 2;
}

int cmd_fit(const std::string& in_path, std::ostream& out) {
  std::ifstream in(in_path);
  if (!in) throw UsageError("cannot open '" + in_path + "'");
  ConvergenceTable table;
  try {
    table = read_convergence_csv(in);
  } catch (const std::runtime_error& e) {
    throw UsageError(in_path + ": " + e.what());
  }
  out << "theta,slope,intercept\n";
  for (const auto& [theta, fit] : refit(table)) {
    out << format_double(theta) << ',' << format_double(fit.slope) << ',' << format_double(fit.intercept) << '\n';
  }
  return 0;
}

int cmd_diagnose(const std::string& problem, double theta, int level, std::size_t paths, std::uint64_t seed, int p,
                 const std::string& out_path, const CommonRun& common, std::ostream& out, std::ostream& err) {
  const SdaeProblem prob = load_problem(problem);
  DiagnosticsReport rep;
  try {
    rep = diagnostics(prob, theta, level, paths, seed, p, common.options());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Sink sink(out_path, out);
  write_diagnostics_csv(sink.stream(), rep);
  err << "holder_slope=" << format_double(rep.holder_slope) << '\n';
  if (rep.n_failed > 0) {
    err << "error: " << rep.n_failed << " failed paths\n";
    return 2;
  }
  return 0;
}

}  // namespace

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int a = to_int(text.substr(0, dots));
    const int b = to_int(text.substr(dots + 2));
    if (a > b) throw std::invalid_argument("empty level range '" + text + "'");
    for (int l = a; l <= b; ++l) out.push_back(l);
    return out;
  }
  for (const auto& f : split_csv_line(text)) out.push_back(to_int(f));
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : split_csv_line(text)) out.push_back(parse_double(f));
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic theta method for index-1 SDAEs"};
  app.name("sdae");
  app.require_subcommand(1);

  std::string labels;
  for (const auto& l : builtin_labels()) labels += (labels.empty() ? "" : ", ") + l;
  const std::string problem_help = "Built-in problem: " + labels;

  std::string problem, thetas = "0.5,0.75,1.0", levels = "6..11", measure = "terminal", out_path, in_path;
  std::string method = "stm";
  int ref_level = 13, level = 10, p = 2;
  std::size_t paths = 1000, diag_paths = 200;
  std::uint64_t seed = 0, stream = 0;
  double theta = 1.0;
  std::optional<double> perturb;
  CommonRun conv_common, sim_common, diag_common;

  auto* conv = app.add_subcommand("convergence", "Strong-error ladder and fitted slopes (CSV)");
  conv->add_option("--problem", problem, problem_help)->required();
  conv->add_option("--thetas", thetas, "Comma-separated thetas in [1/2, 1]");
  conv->add_option("--ref-level", ref_level, "Reference step 2^-L");
  conv->add_option("--levels", levels, "Coarse levels, a..b or comma list");
  conv->add_option("--paths", paths, "Brownian paths")->check(CLI::PositiveNumber);
  conv->add_option("--seed", seed, "Generator seed");
  conv->add_option("--measure", measure, "Error measure")->check(CLI::IsMember({"terminal", "max"}));
  conv->add_option("--out", out_path, "Output CSV (default stdout)");
  add_common(conv, conv_common);

  auto* sim = app.add_subcommand("simulate", "One trajectory (CSV)");
  sim->add_option("--problem", problem, problem_help)->required();
  sim->add_option("--theta", theta, "Theta in [1/2, 1]");
  sim->add_option("--level", level, "Step 2^-L");
  sim->add_option("--seed", seed, "Generator seed");
  sim->add_option("--stream", stream, "Path index");
  sim->add_option("--method", method, "stm or inherent")->check(CLI::IsMember({"stm", "inherent"}));
  sim->add_option("--out", out_path, "Output CSV (default stdout)");
  add_common(sim, sim_common);

  auto* chk = app.add_subcommand("check", "Problem self-checks");
  chk->add_option("--problem", problem, problem_help)->required();
  chk->add_option("--perturb-jacobian", perturb, "Add EPS to every analytic Jacobian entry (negative control)");

  auto* fit = app.add_subcommand("fit", "Refit slopes from a convergence CSV");
  fit->add_option("--in", in_path, "Convergence CSV")->required();

  auto* diag = app.add_subcommand("diagnose", "Moment curve and Hoelder slope (CSV)");
  diag->add_option("--problem", problem, problem_help)->required();
  diag->add_option("--theta", theta, "Theta in [1/2, 1]");
  diag->add_option("--level", level, "Step 2^-L");
  diag->add_option("--paths", diag_paths, "Brownian paths")->check(CLI::PositiveNumber);
  diag->add_option("--seed", seed, "Generator seed");
  diag->add_option("--p", p, "Even moment order");
  diag->add_option("--out", out_path, "Output CSV (default stdout)");
  add_common(diag, diag_common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*conv) {
      return cmd_convergence(problem, thetas, ref_level, levels, paths, seed, measure, out_path, conv_common, out,
                             err);
    }
    if (*sim) return cmd_simulate(problem, theta, level, seed, stream, method, out_path, sim_common, out, err);
    if (*chk) return cmd_check(problem, perturb, out);
    if (*fit) return cmd_fit(in_path, out);
    if (*diag) return cmd_diagnose(problem, theta, level, diag_paths, seed, p, out_path, diag_common, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace sdae::cli
