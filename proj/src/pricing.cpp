#include "notif/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "notif/eg.hpp"
#include "notif/error.hpp"
#include "notif/rng.hpp"

namespace notif {

std::vector<double> combined_bids(std::span<const Event> events,
                                  std::span<const double> betas, double beta_p) {
  std::vector<double> out;
  out.reserve(events.size());
  for (const Event& e : events) {
    if (e.type >= betas.size()) throw InvalidInstance("event type out of range");
    out.push_back(betas[e.type] * e.v + beta_p * e.v_p);
  }
  return out;
}

double kth_largest(std::span<double> xs, std::size_t k) {
  if (k == 0 || k > xs.size()) throw std::out_of_range("kth_largest: k out of range");
  auto it = xs.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(xs.begin(), it, xs.end(), std::greater<>());
  return *it;
}

PriceBook learn_prices(std::span<const Event> window, std::span<const double> bids,
                       std::span<const std::int64_t> supplies) {
  if (bids.size() != window.size()) {
    throw InvalidInstance("learn_prices: bids and events differ in length");
  }
  PriceBook book(supplies.size());
  std::vector<std::vector<double>> per_user(supplies.size());
  for (std::size_t k = 0; k < window.size(); ++k) {
    const std::size_t j = window[k].user;
    if (j >= supplies.size()) throw InvalidInstance("learn_prices: user out of range");
    per_user[j].push_back(bids[k]);
  }
  for (std::size_t j = 0; j < supplies.size(); ++j) {
    const auto s = static_cast<std::size_t>(supplies[j]);
    if (per_user[j].size() > s) book.prices[j] = kth_largest(per_user[j], s + 1);
  }
  return book;
}

BetaEstimate estimate_betas(const MarketInstance& window, double sample_rate,
                            std::uint64_t seed) {
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw InvalidInstance("sample rate must be in (0, 1]");
  }
  CounterRng rng(CounterRng::derive(seed, 0x5a3b1e));
  std::vector<bool> keep(window.m(), false);
  for (std::size_t j = 0; j < window.m(); ++j) keep[j] = rng.uniform() < sample_rate;

  // Keep one valued opportunity per buyer so that no log term degenerates.
  auto ensure = [&](auto&& valued, std::span<const std::size_t> idx) {
    for (std::size_t k : idx) {
      if (keep[window.event(k).user] && valued(window.event(k))) return;
    }
    for (std::size_t k : idx) {
      if (valued(window.event(k))) {
        keep[window.event(k).user] = true;
        return;
      }
    }
  };
  for (std::size_t i = 0; i < window.n(); ++i) {
    ensure([](const Event& e) { return e.v > 0.0; }, window.events_of_type(i));
  }
  if (window.platform_budget() > 0.0) {
    std::vector<std::size_t> all(window.horizon());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    ensure([](const Event& e) { return e.v_p > 0.0; }, all);
  }

  std::vector<std::size_t> remap(window.m(), 0);
  std::vector<std::int64_t> supplies;
  double kept_supply = 0.0, total_supply = 0.0;
  for (std::size_t j = 0; j < window.m(); ++j) {
    total_supply += static_cast<double>(window.supply(j));
    if (!keep[j]) continue;
    remap[j] = supplies.size();
    supplies.push_back(window.supply(j));
    kept_supply += static_cast<double>(window.supply(j));
  }
  std::vector<Event> events;
  for (const Event& e : window.events()) {
    if (!keep[e.user]) continue;
    Event c = e;
    c.t = static_cast<std::int64_t>(events.size() + 1);
    c.user = remap[e.user];
    events.push_back(c);
  }
  const double share = kept_supply / total_supply;
  std::vector<double> budgets(window.budgets().begin(), window.budgets().end());
  for (double& b : budgets) b *= share;
  const std::size_t m = supplies.size();
  const MarketInstance sub(window.n(), m, std::move(budgets),
                           window.platform_budget() * share, std::move(supplies),
                           std::move(events));
  const EgSolution sol = solve_eg(sub);
  return {sol.betas, sol.beta_p, sub.m()};
}

void dynamic_price_update(PriceBook& book, std::size_t user, std::int64_t supply) {
  auto& h = book.history.at(user);
  const auto k = static_cast<std::size_t>(supply) + 1;
  if (h.size() < k) {
    throw std::logic_error("dynamic price update for user " + std::to_string(user + 1) +
                           " with only " + std::to_string(h.size()) + " bids seen");
  }
  std::vector<double> tmp = h;
  book.prices[user] = std::max(book.prices[user], kth_largest(tmp, k));
}

double da_price_step(double price, double eta, double supply_rate, double consumed) {
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be positive");
  return std::max(0.0, price - eta * (supply_rate - consumed));
}

double da_step_size(std::int64_t t) {
  return 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(t, 1)));
}

}  // namespace notif
