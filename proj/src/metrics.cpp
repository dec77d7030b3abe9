#include "notif/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "notif/error.hpp"

namespace notif {

double stddev(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double percentile(std::span<const double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double clipped_stddev(std::span<const double> xs) {
  const double lo = percentile(xs, 5.0);
  const double hi = percentile(xs, 95.0);
  std::vector<double> clipped(xs.begin(), xs.end());
  for (double& x : clipped) x = std::clamp(x, lo, hi);
  return stddev(clipped);
}

std::vector<double> trace_column(const MultiplierTrace& trace,
                                 std::size_t col) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& row : trace) out.push_back(row.at(col));
  return out;
}

MetricsReport compute_metrics(const MarketInstance& inst,
                              std::span<const std::uint8_t> sent,
                              const MultiplierTrace& trace,
                              std::span<const double> bids) {
  if (sent.size() != inst.horizon() || bids.size() != inst.horizon()) {
    throw InvalidInstance("send log and bid log must have one entry per event (" +
                          std::to_string(inst.horizon()) + ")");
  }
  for (const auto& row : trace) {
    if (row.size() < inst.n()) {
      throw InvalidInstance("multiplier trace rows need one entry per type");
    }
  }

  MetricsReport r;
  r.sent_per_type.assign(inst.n(), 0);
  std::vector<std::int64_t> sent_user(inst.m(), 0);
  std::vector<std::int64_t> rejected_user(inst.m(), 0);
  double value_sum = 0.0, bid_sum = 0.0;
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    const Event& e = inst.event(k);
    if (sent[k]) {
      ++r.sent_total;
      ++r.sent_per_type[e.type];
      ++sent_user[e.user];
      value_sum += e.v;
      bid_sum += bids[k];
    } else {
      ++rejected_user[e.user];
    }
  }
  if (r.sent_total > 0) {
    r.avg_winning_valuation = value_sum / static_cast<double>(r.sent_total);
    r.avg_winning_bid = bid_sum / static_cast<double>(r.sent_total);
  }

  std::int64_t over_s = 0, over_2s = 0, excess = 0, wasting = 0, wasted = 0;
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const std::int64_t s = inst.supply(j);
    if (sent_user[j] > s) ++over_s;
    if (sent_user[j] > 2 * s) ++over_2s;
    excess += std::max<std::int64_t>(0, sent_user[j] - s);
    const std::int64_t w =
        std::max<std::int64_t>(0, std::min(s - sent_user[j], rejected_user[j]));
    if (w > 0) ++wasting;
    wasted += w;
  }
  const auto m = static_cast<double>(inst.m());
  r.violation_rate_s = static_cast<double>(over_s) / m;
  r.violation_rate_2s = static_cast<double>(over_2s) / m;
  r.violation_avg_per_user = static_cast<double>(excess) / m;
  r.wastage_rate = static_cast<double>(wasting) / m;
  r.wastage_avg_per_user = static_cast<double>(wasted) / m;

  for (std::size_t i = 0; i < inst.n(); ++i) {
    const auto col = trace_column(trace, i);
    r.multiplier_stddev.push_back(stddev(col));
    r.multiplier_stddev_clipped.push_back(clipped_stddev(col));
  }
  return r;
}

}  // namespace notif
