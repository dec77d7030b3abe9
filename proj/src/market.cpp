#include "notif/market.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "notif/error.hpp"

namespace notif {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

MarketInstance::MarketInstance(std::size_t n, std::size_t m,
                               std::vector<double> budgets,
                               double platform_budget,
                               std::vector<std::int64_t> supplies,
                               std::vector<Event> events)
    : budgets_(std::move(budgets)),
      platform_budget_(platform_budget),
      supplies_(std::move(supplies)),
      events_(std::move(events)) {
  if (n == 0 || m == 0) throw InvalidInstance("n and m must be positive");
  if (budgets_.size() != n) {
    throw InvalidInstance("expected " + std::to_string(n) + " budgets, got " +
                          std::to_string(budgets_.size()));
  }
  if (supplies_.size() != m) {
    throw InvalidInstance("expected " + std::to_string(m) + " supplies, got " +
                          std::to_string(supplies_.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(budgets_[i]) || budgets_[i] <= 0.0) {
      throw InvalidInstance("budget of type " + std::to_string(i + 1) +
                            " must be positive");
    }
  }
  if (!finite_nonneg(platform_budget_)) {
    throw InvalidInstance("platform budget must be non-negative");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (supplies_[j] < 1) {
      throw InvalidInstance("supply of user " + std::to_string(j + 1) +
                            " must be a positive integer");
    }
  }

  by_type_.assign(n, {});
  by_user_.assign(m, {});
  pair_counts_.assign(n * m, 0);
  std::vector<bool> has_value(n, false);
  for (std::size_t k = 0; k < events_.size(); ++k) {
    const Event& e = events_[k];
    if (e.t != static_cast<std::int64_t>(k + 1)) {
      throw InvalidInstance("event " + std::to_string(k + 1) + " has t=" +
                            std::to_string(e.t) +
                            "; times must run 1..horizon without gaps");
    }
    if (e.type >= n || e.user >= m) {
      throw InvalidInstance("event t=" + std::to_string(e.t) +
                            " references an unknown type or user");
    }
    if (!finite_nonneg(e.v) || !finite_nonneg(e.v_p)) {
      throw InvalidInstance("event t=" + std::to_string(e.t) +
                            " has a negative or non-finite valuation");
    }
    by_type_[e.type].push_back(k);
    by_user_[e.user].push_back(k);
    ++pair_counts_[e.type * m + e.user];
    if (e.v > 0.0) has_value[e.type] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!has_value[i]) {
      throw InvalidInstance(
          "notification type " + std::to_string(i + 1) +
          " has no event with positive value; its log-utility would be "
          "unbounded below");
    }
  }
}

double MarketInstance::total_budget() const {
  double total = platform_budget_;
  for (double b : budgets_) total += b;
  return total;
}

MarketInstance MarketInstance::with_budgets(std::vector<double> budgets,
                                            double platform_budget) const {
  return MarketInstance(n(), m(), std::move(budgets), platform_budget,
                        supplies_, events_);
}

std::vector<double> budget_fractions(const MarketInstance& inst) {
  const double total = inst.total_budget();
  std::vector<double> f(inst.n() + 1);
  for (std::size_t i = 0; i < inst.n(); ++i) f[i] = inst.budget(i) / total;
  f[inst.n()] = inst.platform_budget() / total;
  return f;
}

UtilityVector utilities(const MarketInstance& inst, std::span<const double> x) {
  if (x.size() != inst.horizon()) {
    throw InvalidInstance("allocation has " + std::to_string(x.size()) +
                          " entries, instance horizon is " +
                          std::to_string(inst.horizon()));
  }
  UtilityVector out;
  out.u.assign(inst.n(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Event& e = inst.event(k);
    out.u[e.type] += e.v * x[k];
    out.u_p += e.v_p * x[k];
  }
  return out;
}

bool is_padded(const MarketInstance& inst) {
  for (std::size_t i = 0; i < inst.n(); ++i) {
    for (std::size_t j = 0; j < inst.m(); ++j) {
      if (static_cast<std::int64_t>(inst.pair_count(i, j)) < inst.supply(j)) {
        return false;
      }
    }
  }
  return true;
}

MarketInstance pad_for_benchmarks(const MarketInstance& inst) {
  std::vector<Event> events(inst.events().begin(), inst.events().end());
  std::int64_t t = static_cast<std::int64_t>(events.size());
  for (std::size_t j = 0; j < inst.m(); ++j) {
    for (std::size_t i = 0; i < inst.n(); ++i) {
      for (auto c = static_cast<std::int64_t>(inst.pair_count(i, j));
           c < inst.supply(j); ++c) {
        events.push_back(Event{++t, i, j, 0.0, 0.0});
      }
    }
  }
  std::vector<double> budgets(inst.budgets().begin(), inst.budgets().end());
  std::vector<std::int64_t> supplies(inst.supplies().begin(),
                                     inst.supplies().end());
  return MarketInstance(inst.n(), inst.m(), std::move(budgets),
                        inst.platform_budget(), std::move(supplies),
                        std::move(events));
}

static void require_padded(const MarketInstance& inst, const char* op) {
  if (!is_padded(inst)) {
    throw InvalidInstance(std::string(op) +
                          ": instance has |T_i ∩ T_j| < s_j for some pair; "
                          "pad it with pad_for_benchmarks first");
  }
}

ProportionalBenchmarks proportional_benchmarks(const MarketInstance& inst) {
  require_padded(inst, "proportional_benchmarks");
  const auto f = budget_fractions(inst);
  const double f_p = f[inst.n()];
  ProportionalBenchmarks out;
  out.u.assign(inst.n(), 0.0);
  for (const Event& e : inst.events()) {
    const auto s = static_cast<double>(inst.supply(e.user));
    const auto pair = static_cast<double>(inst.pair_count(e.type, e.user));
    const auto per_user =
        static_cast<double>(inst.events_of_user(e.user).size());
    out.u[e.type] += e.v * s * f[e.type] / pair;
    out.u_p += e.v_p * (s / per_user) * f_p;
  }
  return out;
}

std::vector<double> sp_proportional_share(const MarketInstance& inst) {
  require_padded(inst, "sp_proportional_share");
  const auto f = budget_fractions(inst);
  std::vector<double> share(inst.n(), 0.0);
  std::vector<std::vector<double>> values(inst.n());
  for (std::size_t j = 0; j < inst.m(); ++j) {
    for (auto& vs : values) vs.clear();
    for (std::size_t k : inst.events_of_user(j)) {
      values[inst.event(k).type].push_back(inst.event(k).v);
    }
    for (std::size_t i = 0; i < inst.n(); ++i) {
      auto& vs = values[i];
      std::sort(vs.begin(), vs.end(), std::greater<>());
      double remaining = f[i] * static_cast<double>(inst.supply(j));
      for (std::size_t r = 0; r < vs.size() && remaining > 0.0; ++r) {
        const double take = std::min(1.0, remaining);
        share[i] += take * vs[r];
        remaining -= take;
      }
    }
  }
  return share;
}

}  // namespace notif
