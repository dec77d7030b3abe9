#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "notif/market.hpp"

namespace notif {

// Per-user reserve prices with the bookkeeping the dynamic update needs.
struct PriceBook {
  std::vector<double> prices;
  std::vector<std::int64_t> sent_counts;       // sends in the current window
  std::vector<std::vector<double>> history;    // combined bids seen per user

  PriceBook() = default;
  explicit PriceBook(std::size_t m)
      : prices(m, 0.0), sent_counts(m, 0), history(m) {}
  explicit PriceBook(std::vector<double> p)
      : prices(std::move(p)), sent_counts(prices.size(), 0), history(prices.size()) {}

  std::size_t size() const { return prices.size(); }
};

// beta_{i(t)} v^t + beta_p v_p^t for every event.
std::vector<double> combined_bids(std::span<const Event> events,
                                  std::span<const double> betas, double beta_p);

// k-th largest value (1-based) of xs; xs is left in unspecified order.
double kth_largest(std::span<double> xs, std::size_t k);

// p_j = (s_j + 1)-th largest bid among user j's window events if the user has
// more than s_j of them, else 0. `bids` is aligned with `window`.
PriceBook learn_prices(std::span<const Event> window, std::span<const double> bids,
                       std::span<const std::int64_t> supplies);

// Multipliers for bid reconstruction: the hindsight program solved on a
// uniform user subsample of the window. Budgets are scaled by the sampled
// share of total supply. Users are added beyond the sample when needed so
// that every type keeps an opportunity with positive value.
struct BetaEstimate {
  std::vector<double> betas;
  double beta_p = 0.0;
  std::size_t users_sampled = 0;
};
BetaEstimate estimate_betas(const MarketInstance& window, double sample_rate,
                            std::uint64_t seed);

// Raises p_j to the (s_j + 1)-th largest bid recorded in book.history[user],
// never lowering it. Throws std::logic_error with fewer than s_j + 1 bids.
void dynamic_price_update(PriceBook& book, std::size_t user, std::int64_t supply);

// p <- max(0, p - eta (s_j / T - consumed)): the price falls while the user
// is under-consumed relative to its supply rate and rises otherwise.
double da_price_step(double price, double eta, double supply_rate, double consumed);

// Default step size schedule eta_t = 1 / sqrt(t), t >= 1.
double da_step_size(std::int64_t t);

}  // namespace notif
