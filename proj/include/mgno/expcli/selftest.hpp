/// @file selftest.hpp
/// @brief Release-gate checks: solver oracles, schedule equivalences, init and gradients.

#pragma once

#include <string>
#include <vector>

namespace mgno::cli {

struct CheckResult {
  std::string module;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Central-difference check of every differentiable primitive, one result per op.
std::vector<CheckResult> primitive_gradchecks(double tol = 1e-6);

/// Every parameter of a 2-scale MGNO (and of each baseline) on a 10-node toy graph.
std::vector<CheckResult> model_gradchecks(double tol = 1e-4);

/// Darcy manufactured-solution order between grids 64 and 128.
CheckResult darcy_order_check();
/// Small-amplitude Burgers against eps·exp(-nu)·sin(x).
CheckResult burgers_heat_check();
/// Mean conservation and energy decay on `samples` random Burgers initial conditions.
CheckResult burgers_invariants_check(std::size_t samples = 100);
CheckResult schedule_check();
CheckResult orthogonality_check();

std::vector<CheckResult> run_selftest();

/// One line per check plus a summary line.
std::string format_checks(const std::vector<CheckResult>& checks);

bool all_pass(const std::vector<CheckResult>& checks);

}  // namespace mgno::cli
