#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "notif/decision.hpp"
#include "notif/market.hpp"
#include "notif/metrics.hpp"
#include "notif/pricing.hpp"

namespace notif {

enum class ClampMode {
  proportional,  // beta_i = min(B_i / ubar_i, B_i / underline_u_i)
  delta0,        // beta_i = clamp(B_i / ubar_i, B_i / (1 + d0), 1 + d0)
};

// Online first-price pacing state. Budgets and floors are per-step rates:
// a horizon budget B_i over T steps enters as B_i / T, and the proportional
// utility floors likewise as underline_u_i / T.
struct PaceState {
  std::int64_t t = 0;
  std::vector<double> budgets;
  double platform_budget = 0.0;
  std::vector<double> betas;
  double beta_p = 0.0;
  std::vector<double> cum_utils;
  double cum_util_p = 0.0;
  std::vector<double> floors;
  double floor_p = 0.0;
  ClampMode clamp_mode = ClampMode::proportional;
  double delta0 = 0.05;
};

// Fresh state with every multiplier at its upper clamp. In proportional mode each
// positive budget needs a positive floor.
PaceState make_pace_state(std::span<const double> budgets, double platform_budget,
                          std::span<const double> floors, double floor_p,
                          ClampMode mode = ClampMode::proportional, double delta0 = 0.05);

// Starts the state as if t0 steps had already produced the per-step
// utilities that make B_i / ubar_i equal the given multipliers, so the first
// updates move the multipliers only by O(1 / t0).
void pace_warm_start(PaceState& state, std::int64_t t0, std::span<const double> betas,
                     double beta_p);

// Per-step proportional utilities of a window, for use as PACE floors.
std::pair<std::vector<double>, double> pace_floors(const MarketInstance& window);

// Sends iff beta_i v + beta_p v_p >= p_j (ties send); first price, so each
// side pays its own part of the bid.
Decision fp_decide(const PaceState& state, const PriceBook& prices, const Event& e);

// One step of the multiplier update after the auction at step t + 1. Only
// `type` may have received utility.
void pace_update(PaceState& state, std::size_t type, double u, double u_p);

struct PaceRun {
  MultiplierTrace betas;  // multipliers in force after each step
  std::vector<std::uint8_t> sent;
  std::vector<double> bids;
  std::vector<double> type_charges;
  std::vector<double> platform_charges;
  std::vector<double> sq_dist;  // ||beta^t - beta*||^2, when beta* is given
  PaceState final_state;
};

// Algorithm loop over a stream with fixed prices. beta_star holds the n type
// multipliers followed by the platform one; the platform coordinate enters
// the distance only when the platform budget is positive.
PaceRun run_pace(PaceState state, std::span<const Event> events,
                 const PriceBook& prices,
                 std::optional<std::vector<double>> beta_star = std::nullopt);

struct BetaStar {
  std::vector<double> betas;
  double beta_p = 0.0;
  std::vector<double> avg_utils;  // per-step utilities at the optimum
  double avg_util_p = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

// Reference multipliers of the stationary market: minimizes
//   (1/N) sum_k [beta_{i_k} v_k + beta_p v_pk - p_{j_k}]^+ - sum b_i log beta_i - b_p log beta_p
// over beta through its primal, with per-step budgets b. Throws
// NonConvergence when the solver stops above tol.
BetaStar underlying_beta_star(std::span<const Event> samples,
                              std::span<const double> user_prices,
                              std::span<const double> budgets, double platform_budget,
                              double tol = 1e-9);

// Same, drawing `samples` events from a sampler called with 0, 1, 2, ...
BetaStar underlying_beta_star(const std::function<Event(std::uint64_t)>& sampler,
                              std::span<const double> user_prices,
                              std::span<const double> budgets, double platform_budget,
                              std::size_t samples, double tol = 1e-9);

// Gradient-size constants for the convergence envelope, estimated on a
// sample. The first follows max_i E[(sqrt v_i + sqrt v_p)^2] over types, the
// second max_i E[v_i^2] over types and the platform; v_i is zero on events
// of other types.
struct GradientBounds {
  double g2_sqrt_sum = 0.0;
  double g2_second_moment = 0.0;
};
GradientBounds gradient_bounds(std::span<const Event> samples, std::size_t n);

// (6 + log t) G^2 / (t denom^2). With denom = min underline_u this is the
// stated mean-square bound; with denom = min B / (1 + d0)^2 it is the
// clamped-projection variant.
double pace_envelope(double t, double g2, double denom);

}  // namespace notif
