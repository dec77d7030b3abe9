#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "notif/market.hpp"
#include "notif/metrics.hpp"
#include "notif/pace.hpp"
#include "notif/rng.hpp"

namespace notif {

// Valuation law on [0, 1], sampled by inverse CDF from one uniform draw.
struct ValueDist {
  enum class Kind { uniform, kumaraswamy, constant };
  Kind kind = Kind::uniform;
  double a = 0.0;  // uniform: lo; kumaraswamy: shape a; constant: value
  double b = 1.0;  // uniform: hi; kumaraswamy: shape b

  static ValueDist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static ValueDist kumaraswamy(double a, double b) { return {Kind::kumaraswamy, a, b}; }
  static ValueDist constant(double c) { return {Kind::constant, c, c}; }

  double sample(double u) const;
  double mean() const;
  void validate() const;  // throws InvalidInstance
};

// Values of events at positions >= at_step (0-based) are multiplied by the
// per-type factor and clipped to [0, 1].
struct Shift {
  std::int64_t at_step = 0;
  std::vector<double> factors;
};

struct StreamConfig {
  std::size_t n = 4;
  std::size_t m = 2000;
  std::int64_t horizon = 50000;
  std::vector<double> type_weights;   // empty means uniform
  double user_skew = 0.0;             // Zipf exponent over users
  std::vector<ValueDist> value_dist;  // one per type
  ValueDist platform_value_dist = ValueDist::constant(0.0);
  std::optional<Shift> shift;
  std::uint64_t seed = 1;

  void validate() const;
};

// Event k (0-based) is a pure function of (seed, k): four counter draws pick
// the type, user, v and v_p.
class StreamGenerator {
 public:
  explicit StreamGenerator(StreamConfig config);
  Event at(std::int64_t k) const;
  const StreamConfig& config() const { return config_; }

 private:
  StreamConfig config_;
  DiscreteSampler types_;
  DiscreteSampler users_;
};

std::vector<Event> generate_events(const StreamConfig& config);

MarketInstance generate_stream(const StreamConfig& config, std::vector<double> budgets,
                               double platform_budget, std::vector<std::int64_t> supplies);

enum class Arm { fp_pace, fp_budget_pacing, sp_budget_pacing };
const char* arm_name(Arm arm);
Arm parse_arm(const std::string& name);  // throws InvalidInstance

struct ExperimentConfig {
  StreamConfig stream;
  std::vector<double> budgets{100.0, 3500.0, 2887.0, 4448.0};  // for the test window
  double platform_budget = 0.0;
  std::int64_t supply = 5;
  std::vector<std::int64_t> supplies;  // overrides `supply` when non-empty
  std::vector<Arm> arms{Arm::fp_pace, Arm::fp_budget_pacing, Arm::sp_budget_pacing};
  std::int64_t learning_window = 0;  // 0 means horizon - test_window
  std::int64_t test_window = 0;      // 0 means horizon / 3
  std::int64_t price_window = 0;     // fp_pace price learning; 0 means test_window
  int replicas = 1;
  double sample_rate = 0.1;
  bool dynamic_prices = true;
  ClampMode clamp_mode = ClampMode::proportional;
  double delta0 = 0.05;
  std::int64_t update_every = 100;
  double gamma = 0.1;
  double eps = 1e-9;
  std::int64_t baseline_window = 1000;  // steps before the shift for beta_ref

  // Resolves defaults and checks that the windows partition the horizon.
  void finalize();
  std::vector<std::int64_t> user_supplies() const;
};

// The comparison setup: n = 4, m = 2000, horizon 50000, s = 5.
ExperimentConfig default_experiment();

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const nlohmann::json& doc);

struct ArmRun {
  Arm arm = Arm::fp_pace;
  int replica = 0;
  MetricsReport metrics;
  MultiplierTrace trace;  // one row per test step
  std::vector<double> spend;
  double spend_p = 0.0;
  double max_charge = 0.0;  // largest single type charge
  std::int64_t priced_rejections = 0;  // events dropped with bid below price
  std::vector<double> utilities;
  // Per test step: the event, the decision and what each side paid.
  std::vector<Event> events;
  std::vector<std::uint8_t> sent;
  std::vector<double> bids;
  std::vector<double> prices;  // user price in force when the event arrived
  std::vector<double> type_charges;
  std::vector<double> platform_charges;
};

// Runs the configured arms on every replica. Replica r uses the stream seed
// derive(seed, r), so adding replicas never changes earlier ones.
std::vector<ArmRun> run_experiment(const ExperimentConfig& config);

// One replica, one stream, the given arms.
std::vector<ArmRun> run_replica(const ExperimentConfig& config, int replica);

struct Excursion {
  Arm arm = Arm::fp_pace;
  int replica = 0;
  std::vector<double> excursion;  // per type, max |beta - ref| / ref after the shift
  std::vector<double> stddev;
  std::vector<double> stddev_clipped;
};

// Relative excursion of each type's multiplier after the shift, against the
// median over the baseline window before it. Requires a shift inside the
// test window.
std::vector<Excursion> stability_study(const ExperimentConfig& config);

Excursion excursion_of(const ArmRun& run, std::int64_t shift_step, std::int64_t baseline);

nlohmann::json to_json(const MetricsReport& r);
// Columns: t, then beta_1..beta_n, beta_p.
std::string trace_csv(const MultiplierTrace& trace);
// Columns: t, type_id, user_id, v, v_p, sent, bid, price, type_charge,
// platform_charge, then the multipliers after the step. Ids are 1-based.
std::string step_csv(const ArmRun& run);
// One row per arm and replica with the headline metrics.
std::string comparison_table(const std::vector<ArmRun>& runs);

}  // namespace notif
