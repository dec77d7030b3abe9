#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace notif {

// Concave program solved by projected gradient ascent:
//
//   max_x  sum_i B_i log u_i(x) + B_p log u_p(x) - sum_k c_k x_k
//   s.t.   0 <= x_k <= 1,  sum_{k in group g} x_k <= cap_g
//
// with u_i(x) = sum_{k: owner(k) = i} v_k x_k and u_p(x) = sum_k w_k x_k.
// Both the hindsight market program (groups = users, no costs) and the
// sample-average pacing program (no groups, costs = prices / N) are
// instances of it. A zero platform budget drops the platform term.
struct LogUtilityProblem {
  std::vector<double> budgets;  // B_i, one per buyer
  double platform_budget = 0.0;
  std::vector<std::size_t> owner;  // buyer of coordinate k
  std::vector<double> value;       // v_k
  std::vector<double> platform_value;
  std::vector<double> cost;  // empty means all zero
  // Optional grouping; coordinates with group == kNoGroup are box-only.
  static constexpr std::size_t kNoGroup = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> group;
  std::vector<double> group_cap;

  std::size_t size() const { return owner.size(); }
  double total_budget() const;
};

struct PgaOptions {
  double tol = 1e-8;
  std::size_t max_iters = 100000;
  // Utilities are clamped to this floor inside gradient evaluation only.
  double utility_floor = 1e-12;
};

struct PgaResult {
  std::vector<double> x;
  double objective = 0.0;
  // || x - P(x + grad / ||grad||_inf) ||_inf at the returned point.
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Some utility sits at or below the floor at the returned point.
  bool floor_active = false;
};

double log_utility_objective(const LogUtilityProblem& prob,
                             std::span<const double> x);

// x0 must be feasible with every utility positive.
PgaResult maximize_log_utility(const LogUtilityProblem& prob,
                               std::vector<double> x0,
                               const PgaOptions& opts = {});

// Euclidean projection of y onto {x in [0,1]^k : sum x <= cap}, in place.
// Exact: the shift is located by bisection over the sorted breakpoints and
// then solved on the final linear piece.
void project_capped_box(std::span<double> y, double cap);

}  // namespace notif
