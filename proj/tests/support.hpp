#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "notif/market.hpp"
#include "notif/rng.hpp"

namespace notif::testing {

struct InstanceShape {
  std::size_t max_types = 3;
  std::size_t max_users = 2;
  std::size_t min_horizon = 1;
  std::size_t max_horizon = 3;
  double v_lo = 0.1, v_hi = 1.0;
  double b_lo = 0.5, b_hi = 2.0;
  double platform_chance = 0.5;  // probability of a positive platform budget
  double vp_chance = 0.5;        // per event, when the platform is active
  std::int64_t max_supply = 2;
};

// Random valid instance. Types are drawn so that every type gets at least
// one event, which caps n at the horizon.
inline MarketInstance random_instance(CounterRng& rng, const InstanceShape& s) {
  const std::size_t h =
      s.min_horizon + rng.below(s.max_horizon - s.min_horizon + 1);
  const std::size_t n = 1 + rng.below(std::min(s.max_types, h));
  const std::size_t m = 1 + rng.below(s.max_users);
  std::vector<double> budgets(n);
  for (double& b : budgets) b = rng.uniform(s.b_lo, s.b_hi);
  const bool platform = rng.uniform() < s.platform_chance;
  const double bp = platform ? rng.uniform(s.b_lo, s.b_hi) : 0.0;
  std::vector<std::int64_t> supplies(m);
  for (auto& sj : supplies) sj = 1 + static_cast<std::int64_t>(rng.below(s.max_supply));

  std::vector<std::size_t> types(h);
  for (std::size_t k = 0; k < h; ++k) types[k] = k < n ? k : rng.below(n);
  for (std::size_t k = h; k > 1; --k) std::swap(types[k - 1], types[rng.below(k)]);

  std::vector<Event> events;
  bool any_vp = false;
  for (std::size_t k = 0; k < h; ++k) {
    Event e;
    e.t = static_cast<std::int64_t>(k + 1);
    e.type = types[k];
    e.user = rng.below(m);
    e.v = rng.uniform(s.v_lo, s.v_hi);
    if (platform && rng.uniform() < s.vp_chance) {
      e.v_p = rng.uniform(s.v_lo, s.v_hi);
      any_vp = true;
    }
    events.push_back(e);
  }
  if (platform && !any_vp) events.back().v_p = rng.uniform(s.v_lo, s.v_hi);
  return MarketInstance(n, m, std::move(budgets), bp, std::move(supplies),
                        std::move(events));
}

}  // namespace notif::testing
