#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "notif/check.hpp"
#include "notif/decision.hpp"
#include "notif/market.hpp"

namespace notif {

// The `capacity` largest values inserted so far, kept sorted descending,
// plus the count of all insertions.
class TopBids {
 public:
  explicit TopBids(std::size_t capacity = 1) : capacity_(capacity) {}

  void insert(double bid);
  std::span<const double> values() const { return values_; }
  std::size_t seen() const { return seen_; }
  std::size_t capacity() const { return capacity_; }
  void clear() {
    values_.clear();
    seen_ = 0;
  }

 private:
  std::size_t capacity_;
  std::size_t seen_ = 0;
  std::vector<double> values_;
};

// Second-price engine state with the budget-spend pacing controller.
// Budgets are for the whole horizon.
struct SpState {
  std::vector<double> budgets;
  double platform_budget = 0.0;
  std::vector<double> betas;
  double beta_p = 0.0;
  std::vector<double> spend;
  double spend_p = 0.0;
  std::int64_t horizon = 0;
  std::int64_t elapsed = 0;  // events processed
  std::vector<std::int64_t> supplies;
  std::vector<TopBids> top_bids;  // per user, capacity s_j + 1
  // Trailing window in steps for the price statistics; 0 keeps every bid.
  // recent[j] holds user j's (step, bid) pairs still inside the window.
  std::int64_t window = 0;
  std::vector<std::deque<std::pair<std::int64_t, double>>> recent;
  std::int64_t update_every = 100;
  double gamma = 0.1;
  double eps = 1e-9;
};

SpState make_sp_state(std::span<const double> budgets, double platform_budget,
                      std::span<const double> betas, double beta_p,
                      std::span<const std::int64_t> supplies, std::int64_t horizon);

// Records a bid for the user at `step` (steps may be negative for history
// preceding the run) and drops bids that left the trailing window.
void sp_observe(SpState& state, std::size_t user, std::int64_t step, double bid);

// Drops the user's bids older than step - window + 1.
void sp_expire(SpState& state, std::size_t user, std::int64_t step);

// (s_j + 1)-th highest bid seen for the user, or 0 with at most s_j seen.
double sp_price(const SpState& state, std::size_t user);

// Sends iff the combined bid reaches the price (ties send). The type pays
// max(0, price - beta_p v_p) and the platform its full subsidy beta_p v_p.
// A type whose spend has reached its budget does not send, and an exhausted
// platform stops subsidizing.
Decision sp_decide(const SpState& state, const Event& e, double price);

// Books a decision's charges. A type or platform is then out of budget once
// its spend reaches its budget.
void sp_record(SpState& state, const Event& e, const Decision& d);

// beta <- beta * clip(expected / max(actual, eps), 1 - gamma, 1 + gamma) with
// expected = B * elapsed / horizon, for every type and the platform. A
// buyer with neither expected nor actual spend keeps its multiplier.
void budget_pacing_update(SpState& state);

// Per-user price and allocation forced by the multipliers: p_j is the
// (s_j + 1)-th highest bid or 0; bids above p_j send, bids below do not, and
// bids equal to p_j fill the remaining supply in event order.
struct ForcedOutcome {
  std::vector<double> bids;
  std::vector<double> user_prices;
  Allocation x;
};
ForcedOutcome forced_outcome(const MarketInstance& inst, std::span<const double> betas,
                             double beta_p);

// Named checks: price_setting, winning_bids, supply, type_budgets,
// platform_budget, demand, proportional_share. Budget checks are relative to
// the budget; price and bid comparisons are relative to the largest bid.
// Bids equal to the price (within tol) may go either way.
CheckReport verify_nsppe(const MarketInstance& inst, std::span<const double> betas,
                         double beta_p, std::span<const double> user_prices,
                         const Allocation& x, double tol);

struct NsppeCandidate {
  std::vector<double> betas;
  double beta_p = 0.0;
  std::vector<double> user_prices;
  Allocation x;
  double residual = 0.0;  // max relative budget-clearing error
  bool verified = false;
  CheckReport report;
};

// Grid search over [0, beta_max]^n (times the platform axis when B_p > 0)
// with beta_max = 2 max_i B_i / underline_u_i, followed by `refine_rounds`
// local grids ten times finer around the incumbent. Requires n <= 3 and
// horizon <= 30.
NsppeCandidate nsppe_search(const MarketInstance& inst, double grid_step, double tol,
                            int refine_rounds = 0);

}  // namespace notif
