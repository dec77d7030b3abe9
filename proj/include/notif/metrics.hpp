#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "notif/market.hpp"

namespace notif {

// Pacing multipliers over time: one row per step, each row holding the n type
// multipliers followed by the platform multiplier.
using MultiplierTrace = std::vector<std::vector<double>>;

struct MetricsReport {
  double avg_winning_valuation = 0.0;
  double avg_winning_bid = 0.0;
  std::int64_t sent_total = 0;
  std::vector<std::int64_t> sent_per_type;
  double violation_rate_s = 0.0;   // users with sent_j > s_j, as a fraction
  double violation_rate_2s = 0.0;  // users with sent_j > 2 s_j
  double violation_avg_per_user = 0.0;
  double wastage_rate = 0.0;
  double wastage_avg_per_user = 0.0;
  std::vector<double> multiplier_stddev;          // per type
  std::vector<double> multiplier_stddev_clipped;  // after [p5, p95] clipping
};

// Aggregates one run. `sent` and `bids` are aligned with the instance events;
// the trace may have any length, and its rows need at least n entries.
//
// Wasted opportunities for user j: min(s_j - sent_j, rejected_j), floored at
// zero, i.e. rejections that could have been sent without exceeding s_j.
MetricsReport compute_metrics(const MarketInstance& inst,
                              std::span<const std::uint8_t> sent,
                              const MultiplierTrace& trace,
                              std::span<const double> bids);

// Population standard deviation.
double stddev(std::span<const double> xs);

// Linearly interpolated percentile, q in [0, 100].
double percentile(std::span<const double> xs, double q);

// Standard deviation after clipping the series to its [p5, p95] range.
double clipped_stddev(std::span<const double> xs);

// Column `col` of a trace.
std::vector<double> trace_column(const MultiplierTrace& trace, std::size_t col);

}  // namespace notif
