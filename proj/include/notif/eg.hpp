#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "notif/check.hpp"
#include "notif/market.hpp"

namespace notif {

// Hindsight equilibrium: the maximizer of sum_i B_i log u_i + B_p log u_p
// under the per-user supply caps, with the duals that price it.
struct EgSolution {
  Allocation x;
  std::vector<double> user_prices;    // p_j, dual of user j's supply cap
  std::vector<double> event_lambdas;  // lambda^t, dual of x^t <= 1
  std::vector<double> event_prices;   // p_j(t) + lambda^t
  std::vector<double> betas;          // B_i / u_i
  double beta_p = 0.0;                // B_p / u_p, or 0 when B_p = 0
  UtilityVector utils;
  double objective = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // projected-gradient residual of the solver
};

struct EgOptions {
  double tol = 1e-8;
  std::size_t max_iters = 100000;
};

// sum_i B_i log u_i(x) + B_p log u_p(x); -inf when a needed utility is zero.
double eg_objective(const MarketInstance& inst, std::span<const double> x);

// Throws Infeasible when the platform has a budget but no event it values,
// NonConvergence (carrying the final residual) when max_iters is exhausted.
EgSolution solve_eg(const MarketInstance& inst, const EgOptions& opts = {});

struct OracleResult {
  Allocation x;
  double objective = 0.0;
};

// Exhaustive grid search over feasible allocations, for tests on tiny
// instances: horizon <= 4 and grid_step in {0.01, 0.02, 0.05}.
OracleResult eg_oracle(const MarketInstance& inst, double grid_step);

// Dual recovery from an (approximately) optimal allocation:
//   beta_i = B_i / u_i, beta_p = B_p / u_p
//   p_j    = 0 when user j's cap is slack; otherwise the bid of a fractional
//            event at j if there is one, else the highest losing bid, else
//            (every event won) the lowest winning bid
//   lambda = [bid - p_j]^+ on fully sent events, 0 elsewhere
// `eps` decides when x^t counts as 0 or 1 and when a cap counts as tight.
EgSolution recover_duals(const MarketInstance& inst, const Allocation& x,
                         double eps = 1e-7);

// sum_t [beta_i(t) v^t + beta_p v_p^t - p_j(t)]^+ + sum_j s_j p_j
//   - sum_i B_i log beta_i - B_p log beta_p.
// +inf when some beta_i = 0 with B_i > 0 (or beta_p = 0 with B_p > 0).
double dual_objective(const MarketInstance& inst,
                      std::span<const double> user_prices,
                      std::span<const double> betas, double beta_p);

// sum_i (B_i log B_i - B_i) + (B_p log B_p - B_p). At an optimum the primal
// objective equals the dual objective plus this constant.
double duality_constant(const MarketInstance& inst);

// Named checks: budget_clearing, foc_consistency, supply, bang_per_buck,
// proportionality. Relative checks use `tol`; proportionality allows
// u_i >= underline_u_i - proportionality_slack. Benchmarks are evaluated on
// a zero-padded copy of the instance.
CheckReport verify_nfppe(const EgSolution& sol, const MarketInstance& inst,
                         double tol, double proportionality_slack = 1e-6);

nlohmann::json to_json(const EgSolution& sol);
nlohmann::json to_json(const CheckReport& report);
EgSolution eg_solution_from_json(const nlohmann::json& doc);

}  // namespace notif
