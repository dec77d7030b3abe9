#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace notif {

// One notification-generation opportunity. Type and user indices are 0-based
// in memory; the event-log file format is 1-based.
struct Event {
  std::int64_t t = 0;
  std::size_t type = 0;
  std::size_t user = 0;
  double v = 0.0;    // value to the notification type
  double v_p = 0.0;  // value to the platform

  bool operator==(const Event&) const = default;
};

// Send probability (or fraction) per event, indexed like the event list.
using Allocation = std::vector<double>;

struct UtilityVector {
  std::vector<double> u;  // per notification type
  double u_p = 0.0;       // platform
};

// Full hindsight problem. Immutable once constructed; the constructor checks
// every invariant and throws InvalidInstance on violation:
//   - events carry t = 1..horizon in order, without gaps
//   - type < n, user < m, values finite and non-negative
//   - every type owns at least one event with positive value
//   - budgets positive, platform budget non-negative, supplies >= 1
class MarketInstance {
 public:
  MarketInstance(std::size_t n, std::size_t m, std::vector<double> budgets,
                 double platform_budget, std::vector<std::int64_t> supplies,
                 std::vector<Event> events);

  std::size_t n() const { return budgets_.size(); }
  std::size_t m() const { return supplies_.size(); }
  std::size_t horizon() const { return events_.size(); }

  std::span<const double> budgets() const { return budgets_; }
  double budget(std::size_t i) const { return budgets_[i]; }
  double platform_budget() const { return platform_budget_; }
  double total_budget() const;
  std::span<const std::int64_t> supplies() const { return supplies_; }
  std::int64_t supply(std::size_t j) const { return supplies_[j]; }
  std::span<const Event> events() const { return events_; }
  const Event& event(std::size_t k) const { return events_[k]; }

  // Event positions (0-based) per type / per user, in time order.
  std::span<const std::size_t> events_of_type(std::size_t i) const {
    return by_type_[i];
  }
  std::span<const std::size_t> events_of_user(std::size_t j) const {
    return by_user_[j];
  }
  // |T_i ∩ T_j|
  std::size_t pair_count(std::size_t i, std::size_t j) const {
    return pair_counts_[i * m() + j];
  }

  // Same events and supplies, new budgets.
  MarketInstance with_budgets(std::vector<double> budgets,
                              double platform_budget) const;

  bool operator==(const MarketInstance& o) const {
    return budgets_ == o.budgets_ && platform_budget_ == o.platform_budget_ &&
           supplies_ == o.supplies_ && events_ == o.events_;
  }

 private:
  std::vector<double> budgets_;
  double platform_budget_;
  std::vector<std::int64_t> supplies_;
  std::vector<Event> events_;
  std::vector<std::vector<std::size_t>> by_type_;
  std::vector<std::vector<std::size_t>> by_user_;
  std::vector<std::size_t> pair_counts_;
};

// Budget shares f_i = B_i / (B_p + sum_k B_k) for every type, followed by the
// platform share f_p (size n + 1).
std::vector<double> budget_fractions(const MarketInstance& inst);

UtilityVector utilities(const MarketInstance& inst, std::span<const double> x);

// True when |T_i ∩ T_j| >= s_j for every type i and user j.
bool is_padded(const MarketInstance& inst);

// Appends zero-valued events until |T_i ∩ T_j| >= s_j for all (i, j). The
// appended events follow the original horizon, so positions 0..H-1 keep their
// meaning and an allocation of the original instance extends by zeros.
MarketInstance pad_for_benchmarks(const MarketInstance& inst);

struct ProportionalBenchmarks {
  std::vector<double> u;  // underline u_i
  double u_p = 0.0;       // underline u_p
};

// Utilities of the budget-proportional allocations: each type consumes
// s_j f_i / |T_i ∩ T_j| of every opportunity it has at user j; the platform
// gets (s_j / |T_j|) f_p of every opportunity. Requires a padded instance.
ProportionalBenchmarks proportional_benchmarks(const MarketInstance& inst);

// Proportional share utility under second-price: each type receives f_i s_j
// units of user j's supply and spends them on its best opportunities at j
// (fractionally on the boundary one). Requires a padded instance.
std::vector<double> sp_proportional_share(const MarketInstance& inst);

}  // namespace notif
