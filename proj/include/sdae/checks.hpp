#pragma once

// Self-checks of a problem definition: projector algebra, declared bounds,
// Jacobian consistency, initial consistency, sampled assumption constants
// and the sufficient stepsize condition.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdae/problem.hpp"

namespace sdae {

enum class CheckStatus { pass, warn, fail };

struct CheckItem {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct CheckReport {
  std::string problem_label;
  std::vector<CheckItem> items;

  bool passed() const;  // no item failed
  std::size_t count(CheckStatus s) const;
  const CheckItem* find(const std::string& name) const;
};

struct CheckOptions {
  std::size_t n_times = 50;
  std::size_t n_points = 100;   // Jacobian and V^ samples
  std::size_t n_probe = 4000;   // assumption probe pairs
  double box_radius = 2.0;
  std::uint64_t seed = 1;
  double algebra_tol = 1e-10;
  double jacobian_rel_tol = 1e-6;
  std::vector<double> guard_thetas{0.5, 0.75, 1.0};
  std::vector<int> guard_levels{6, 7, 8, 9, 10, 11};
};

CheckReport run_problem_checks(const SdaeProblem& prob, const CheckOptions& options = {});

/// One line per item: `[PASS] name: detail`, `[WARN] ...` or `[FAIL] ...`.
void print_check_report(std::ostream& os, const CheckReport& report);

}  // namespace sdae
