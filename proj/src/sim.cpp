#include "notif/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "notif/error.hpp"
#include "notif/io.hpp"
#include "notif/pricing.hpp"
#include "notif/sp.hpp"

namespace notif {

using nlohmann::json;

double ValueDist::sample(double u) const {
  switch (kind) {
    case Kind::uniform:
      return a + (b - a) * u;
    case Kind::kumaraswamy:
      return std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / a);
    case Kind::constant:
      return a;
  }
  return a;
}

double ValueDist::mean() const {
  switch (kind) {
    case Kind::uniform:
      return 0.5 * (a + b);
    case Kind::kumaraswamy:
      return b * std::exp(std::lgamma(1.0 + 1.0 / a) + std::lgamma(b) -
                          std::lgamma(1.0 + 1.0 / a + b));
    case Kind::constant:
      return a;
  }
  return a;
}

void ValueDist::validate() const {
  const bool ok = [&] {
    switch (kind) {
      case Kind::uniform:
        return 0.0 <= a && a <= b && b <= 1.0;
      case Kind::kumaraswamy:
        return a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b);
      case Kind::constant:
        return 0.0 <= a && a <= 1.0;
    }
    return false;
  }();
  if (!ok) throw InvalidInstance("value distribution parameters out of range");
}

void StreamConfig::validate() const {
  if (n == 0 || m == 0 || horizon <= 0) {
    throw InvalidInstance("stream needs positive n, m and horizon");
  }
  if (!type_weights.empty()) {
    if (type_weights.size() != n) throw InvalidInstance("one type weight per type");
    double total = 0.0;
    for (double w : type_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInstance("type weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidInstance("type weights are all zero");
  }
  if (!(user_skew >= 0.0) || !std::isfinite(user_skew)) {
    throw InvalidInstance("user skew must be >= 0");
  }
  if (value_dist.size() != n) throw InvalidInstance("one value distribution per type");
  for (const auto& d : value_dist) d.validate();
  platform_value_dist.validate();
  if (shift) {
    if (shift->factors.size() != n) throw InvalidInstance("one shift factor per type");
    for (double f : shift->factors) {
      if (!(f >= 0.0) || !std::isfinite(f)) throw InvalidInstance("shift factors must be >= 0");
    }
    if (shift->at_step < 0) throw InvalidInstance("shift step must be >= 0");
  }
}

StreamGenerator::StreamGenerator(StreamConfig config) : config_(std::move(config)) {
  config_.validate();
  std::vector<double> tw = config_.type_weights;
  if (tw.empty()) tw.assign(config_.n, 1.0);
  types_ = DiscreteSampler(tw);
  std::vector<double> uw(config_.m);
  for (std::size_t j = 0; j < config_.m; ++j) {
    uw[j] = std::pow(static_cast<double>(j + 1), -config_.user_skew);
  }
  users_ = DiscreteSampler(uw);
}

Event StreamGenerator::at(std::int64_t k) const {
  CounterRng rng(config_.seed, 4 * static_cast<std::uint64_t>(k));
  Event e;
  e.t = k + 1;
  e.type = types_(rng.uniform());
  e.user = users_(rng.uniform());
  e.v = config_.value_dist[e.type].sample(rng.uniform());
  e.v_p = config_.platform_value_dist.sample(rng.uniform());
  if (config_.shift && k >= config_.shift->at_step) {
    const double f = config_.shift->factors[e.type];
    e.v = std::min(1.0, e.v * f);
    e.v_p = std::min(1.0, e.v_p * f);
  }
  return e;
}

std::vector<Event> generate_events(const StreamConfig& config) {
  const StreamGenerator gen(config);
  std::vector<Event> out;
  out.reserve(static_cast<std::size_t>(config.horizon));
  for (std::int64_t k = 0; k < config.horizon; ++k) out.push_back(gen.at(k));
  return out;
}

MarketInstance generate_stream(const StreamConfig& config, std::vector<double> budgets,
                               double platform_budget, std::vector<std::int64_t> supplies) {
  return MarketInstance(config.n, config.m, std::move(budgets), platform_budget,
                        std::move(supplies), generate_events(config));
}

const char* arm_name(Arm arm) {
  switch (arm) {
    case Arm::fp_pace:
      return "fp_pace";
    case Arm::fp_budget_pacing:
      return "fp_budget_pacing";
    case Arm::sp_budget_pacing:
      return "sp_budget_pacing";
  }
  return "?";
}

Arm parse_arm(const std::string& name) {
  for (Arm a : {Arm::fp_pace, Arm::fp_budget_pacing, Arm::sp_budget_pacing}) {
    if (name == arm_name(a)) return a;
  }
  throw InvalidInstance("unknown arm '" + name +
                        "' (expected fp_pace, fp_budget_pacing or sp_budget_pacing)");
}

void ExperimentConfig::finalize() {
  stream.validate();
  if (test_window == 0) test_window = stream.horizon / 3;
  if (learning_window == 0) learning_window = stream.horizon - test_window;
  if (price_window == 0) price_window = test_window;
  if (test_window <= 0 || learning_window <= 0 ||
      learning_window + test_window != stream.horizon) {
    throw InvalidInstance("learning and test windows must partition the horizon");
  }
  price_window = std::min(price_window, learning_window);
  if (price_window <= 0) throw InvalidInstance("price window must be positive");
  if (replicas < 1) throw InvalidInstance("replicas must be >= 1");
  if (budgets.size() != stream.n) throw InvalidInstance("one budget per type");
  if (arms.empty()) throw InvalidInstance("no arms configured");
  if (!supplies.empty() && supplies.size() != stream.m) {
    throw InvalidInstance("one supply per user");
  }
  if (supplies.empty() && supply < 1) throw InvalidInstance("supply must be >= 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw InvalidInstance("sample rate must be in (0, 1]");
  }
  if (update_every < 1 || !(gamma > 0.0 && gamma < 1.0) || !(eps > 0.0)) {
    throw InvalidInstance("controller needs update_every >= 1, 0 < gamma < 1, eps > 0");
  }
  if (baseline_window < 1) throw InvalidInstance("baseline window must be >= 1");
}

std::vector<std::int64_t> ExperimentConfig::user_supplies() const {
  if (!supplies.empty()) return supplies;
  return std::vector<std::int64_t>(stream.m, supply);
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.stream.n = 4;
  c.stream.m = 2000;
  c.stream.horizon = 50000;
  c.stream.type_weights = {0.05, 0.4, 0.15, 0.4};
  c.stream.user_skew = 0.5;
  c.stream.value_dist = {ValueDist::kumaraswamy(2.0, 2.0), ValueDist::uniform(0.0, 1.0),
                         ValueDist::kumaraswamy(1.5, 3.0), ValueDist::uniform(0.1, 0.9)};
  c.stream.seed = 1;
  return c;
}

namespace {

json dist_to_json(const ValueDist& d) {
  switch (d.kind) {
    case ValueDist::Kind::uniform:
      return {{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
    case ValueDist::Kind::kumaraswamy:
      return {{"kind", "kumaraswamy"}, {"a", d.a}, {"b", d.b}};
    case ValueDist::Kind::constant:
      return {{"kind", "constant"}, {"value", d.a}};
  }
  return {};
}

ValueDist dist_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") return ValueDist::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  if (kind == "kumaraswamy") {
    return ValueDist::kumaraswamy(j.at("a").get<double>(), j.at("b").get<double>());
  }
  if (kind == "constant") return ValueDist::constant(j.at("value").get<double>());
  throw InvalidInstance("unknown value distribution '" + kind + "'");
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  if (!j.is_object()) throw InvalidInstance(where + " must be an object");
  std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw InvalidInstance("unknown key '" + item.key() + "' in " + where);
    }
  }
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json s;
  s["n"] = c.stream.n;
  s["m"] = c.stream.m;
  s["horizon"] = c.stream.horizon;
  s["type_weights"] = c.stream.type_weights;
  s["user_skew"] = c.stream.user_skew;
  s["value_dist"] = json::array();
  for (const auto& d : c.stream.value_dist) s["value_dist"].push_back(dist_to_json(d));
  s["platform_value_dist"] = dist_to_json(c.stream.platform_value_dist);
  if (c.stream.shift) {
    s["shift"] = {{"at_step", c.stream.shift->at_step}, {"factors", c.stream.shift->factors}};
  }
  s["seed"] = c.stream.seed;

  json doc;
  doc["stream"] = s;
  doc["budgets"] = c.budgets;
  doc["platform_budget"] = c.platform_budget;
  if (c.supplies.empty()) {
    doc["supply"] = c.supply;
  } else {
    doc["supplies"] = c.supplies;
  }
  doc["arms"] = json::array();
  for (Arm a : c.arms) doc["arms"].push_back(arm_name(a));
  doc["learning_window"] = c.learning_window;
  doc["test_window"] = c.test_window;
  doc["price_window"] = c.price_window;
  doc["replicas"] = c.replicas;
  doc["sample_rate"] = c.sample_rate;
  doc["dynamic_prices"] = c.dynamic_prices;
  doc["clamp_mode"] = c.clamp_mode == ClampMode::proportional ? "proportional" : "delta0";
  doc["delta0"] = c.delta0;
  doc["update_every"] = c.update_every;
  doc["gamma"] = c.gamma;
  doc["eps"] = c.eps;
  doc["baseline_window"] = c.baseline_window;
  return doc;
}

ExperimentConfig experiment_from_json(const json& doc) {
  reject_unknown(doc,
                 {"stream", "budgets", "platform_budget", "supply", "supplies", "arms",
                  "learning_window", "test_window", "price_window", "replicas",
                  "sample_rate", "dynamic_prices", "clamp_mode", "delta0", "update_every",
                  "gamma", "eps", "baseline_window"},
                 "experiment config");
  ExperimentConfig c = default_experiment();
  try {
    if (doc.contains("stream")) {
      const json& s = doc["stream"];
      reject_unknown(s,
                     {"n", "m", "horizon", "type_weights", "user_skew", "value_dist",
                      "platform_value_dist", "shift", "seed"},
                     "stream");
      if (s.contains("n")) c.stream.n = s["n"].get<std::size_t>();
      if (s.contains("m")) c.stream.m = s["m"].get<std::size_t>();
      if (s.contains("horizon")) c.stream.horizon = s["horizon"].get<std::int64_t>();
      if (s.contains("type_weights")) s["type_weights"].get_to(c.stream.type_weights);
      if (s.contains("user_skew")) c.stream.user_skew = s["user_skew"].get<double>();
      if (s.contains("value_dist")) {
        c.stream.value_dist.clear();
        for (const auto& d : s["value_dist"]) c.stream.value_dist.push_back(dist_from_json(d));
      }
      if (s.contains("platform_value_dist")) {
        c.stream.platform_value_dist = dist_from_json(s["platform_value_dist"]);
      }
      if (s.contains("shift") && !s["shift"].is_null()) {
        Shift sh;
        sh.at_step = s["shift"].at("at_step").get<std::int64_t>();
        s["shift"].at("factors").get_to(sh.factors);
        c.stream.shift = sh;
      }
      if (s.contains("seed")) c.stream.seed = s["seed"].get<std::uint64_t>();
    }
    if (doc.contains("budgets")) doc["budgets"].get_to(c.budgets);
    if (doc.contains("platform_budget")) c.platform_budget = doc["platform_budget"].get<double>();
    if (doc.contains("supply")) c.supply = doc["supply"].get<std::int64_t>();
    if (doc.contains("supplies")) doc["supplies"].get_to(c.supplies);
    if (doc.contains("arms")) {
      c.arms.clear();
      for (const auto& a : doc["arms"]) c.arms.push_back(parse_arm(a.get<std::string>()));
    }
    if (doc.contains("learning_window")) c.learning_window = doc["learning_window"].get<std::int64_t>();
    if (doc.contains("test_window")) c.test_window = doc["test_window"].get<std::int64_t>();
    if (doc.contains("price_window")) c.price_window = doc["price_window"].get<std::int64_t>();
    if (doc.contains("replicas")) c.replicas = doc["replicas"].get<int>();
    if (doc.contains("sample_rate")) c.sample_rate = doc["sample_rate"].get<double>();
    if (doc.contains("dynamic_prices")) c.dynamic_prices = doc["dynamic_prices"].get<bool>();
    if (doc.contains("clamp_mode")) {
      const auto mode = doc["clamp_mode"].get<std::string>();
      if (mode == "proportional") {
        c.clamp_mode = ClampMode::proportional;
      } else if (mode == "delta0") {
        c.clamp_mode = ClampMode::delta0;
      } else {
        throw InvalidInstance("clamp_mode must be 'proportional' or 'delta0'");
      }
    }
    if (doc.contains("delta0")) c.delta0 = doc["delta0"].get<double>();
    if (doc.contains("update_every")) c.update_every = doc["update_every"].get<std::int64_t>();
    if (doc.contains("gamma")) c.gamma = doc["gamma"].get<double>();
    if (doc.contains("eps")) c.eps = doc["eps"].get<double>();
    if (doc.contains("baseline_window")) c.baseline_window = doc["baseline_window"].get<std::int64_t>();
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("experiment config: ") + e.what());
  }
  c.finalize();
  return c;
}

namespace {

// Events [from, to) of the stream, renumbered from t = 1.
MarketInstance window_instance(const ExperimentConfig& c, std::span<const Event> all,
                               std::int64_t from, std::int64_t to, double budget_scale) {
  std::vector<Event> ev(all.begin() + from, all.begin() + to);
  for (std::size_t k = 0; k < ev.size(); ++k) ev[k].t = static_cast<std::int64_t>(k + 1);
  std::vector<double> b = c.budgets;
  for (double& x : b) x *= budget_scale;
  return MarketInstance(c.stream.n, c.stream.m, std::move(b), c.platform_budget * budget_scale,
                        c.user_supplies(), std::move(ev));
}

std::vector<double> row_of(std::span<const double> betas, double beta_p) {
  std::vector<double> row(betas.begin(), betas.end());
  row.push_back(beta_p);
  return row;
}

struct Logs {
  std::vector<std::uint8_t> sent;
  std::vector<double> bids;
  std::vector<double> prices;
  std::vector<double> type_charges;
  std::vector<double> platform_charges;
  MultiplierTrace trace;
  std::vector<double> spend;
  double spend_p = 0.0;
  double max_charge = 0.0;
  std::int64_t priced_out = 0;
};

Logs run_fp_pace(const ExperimentConfig& c, const MarketInstance& test,
                 const MarketInstance& price_win, const BetaEstimate& est) {
  const auto supplies = c.user_supplies();
  const auto win_events = price_win.events();
  const auto win_bids = combined_bids(win_events, est.betas, est.beta_p);
  PriceBook book = learn_prices(win_events, win_bids, supplies);

  const double T = static_cast<double>(test.horizon());
  std::vector<double> rate(c.budgets);
  for (double& b : rate) b /= T;
  const auto [floors, floor_p] = pace_floors(price_win);
  PaceState state =
      make_pace_state(rate, c.platform_budget / T, floors, floor_p, c.clamp_mode, c.delta0);
  pace_warm_start(state, static_cast<std::int64_t>(price_win.horizon()), est.betas, est.beta_p);

  Logs logs;
  logs.spend.assign(c.stream.n, 0.0);
  for (const Event& e : test.events()) {
    Decision d = fp_decide(state, book, e);
    logs.prices.push_back(book.prices[e.user]);
    if (d.bid < book.prices[e.user]) ++logs.priced_out;
    if (d.send && logs.spend[e.type] >= c.budgets[e.type]) d = Decision{false, d.bid, 0.0, 0.0};
    book.history[e.user].push_back(d.bid);
    if (d.send) {
      logs.spend[e.type] += d.type_charge;
      logs.spend_p += d.platform_charge;
      logs.max_charge = std::max(logs.max_charge, d.type_charge);
      if (++book.sent_counts[e.user] > supplies[e.user] && c.dynamic_prices) {
        dynamic_price_update(book, e.user, supplies[e.user]);
      }
    }
    pace_update(state, e.type, d.send ? e.v : 0.0, d.send ? e.v_p : 0.0);
    logs.sent.push_back(d.send ? 1 : 0);
    logs.bids.push_back(d.bid);
    logs.type_charges.push_back(d.type_charge);
    logs.platform_charges.push_back(d.platform_charge);
    logs.trace.push_back(row_of(state.betas, state.beta_p));
  }
  return logs;
}

Logs run_budget_pacing(const ExperimentConfig& c, Arm arm, const MarketInstance& test,
                       const MarketInstance& price_win, const BetaEstimate& est) {
  SpState st = make_sp_state(c.budgets, c.platform_budget, est.betas, est.beta_p,
                             c.user_supplies(), static_cast<std::int64_t>(test.horizon()));
  st.update_every = c.update_every;
  st.gamma = c.gamma;
  st.eps = c.eps;
  st.window = static_cast<std::int64_t>(price_win.horizon());
  const auto win_bids = combined_bids(price_win.events(), est.betas, est.beta_p);
  for (std::size_t k = 0; k < win_bids.size(); ++k) {
    sp_observe(st, price_win.event(k).user,
               static_cast<std::int64_t>(k) - st.window, win_bids[k]);
  }

  Logs logs;
  for (const Event& e : test.events()) {
    sp_expire(st, e.user, st.elapsed);
    const double price = sp_price(st, e.user);
    Decision d = sp_decide(st, e, price);
    logs.prices.push_back(price);
    if (d.bid < price) ++logs.priced_out;
    if (d.send && arm == Arm::fp_budget_pacing) {
      d.type_charge = st.betas[e.type] * e.v;
      d.platform_charge = d.bid - d.type_charge;
    }
    sp_observe(st, e.user, st.elapsed, d.bid);
    sp_record(st, e, d);
    logs.max_charge = std::max(logs.max_charge, d.type_charge);
    if (st.elapsed % st.update_every == 0) budget_pacing_update(st);
    logs.sent.push_back(d.send ? 1 : 0);
    logs.bids.push_back(d.bid);
    logs.type_charges.push_back(d.type_charge);
    logs.platform_charges.push_back(d.platform_charge);
    logs.trace.push_back(row_of(st.betas, st.beta_p));
  }
  logs.spend = st.spend;
  logs.spend_p = st.spend_p;
  return logs;
}

}  // namespace

std::vector<ArmRun> run_replica(const ExperimentConfig& config, int replica) {
  ExperimentConfig c = config;
  c.finalize();
  StreamConfig sc = c.stream;
  sc.seed = CounterRng::derive(c.stream.seed, static_cast<std::uint64_t>(replica));
  const auto events = generate_events(sc);
  const std::int64_t L = c.learning_window, T = c.test_window, W = c.price_window;
  const double t = static_cast<double>(T);

  const MarketInstance test = window_instance(c, events, L, L + T, 1.0);
  const MarketInstance price_win =
      window_instance(c, events, L - W, L, static_cast<double>(W) / t);

  const bool need_bb = std::any_of(c.arms.begin(), c.arms.end(),
                                   [](Arm a) { return a != Arm::fp_pace; });
  const bool need_ub = std::any_of(c.arms.begin(), c.arms.end(),
                                   [](Arm a) { return a == Arm::fp_pace; });
  BetaEstimate est_ub, est_bb;
  if (need_ub) est_ub = estimate_betas(price_win, c.sample_rate, CounterRng::derive(sc.seed, 1));
  if (need_bb) {
    const MarketInstance learn =
        window_instance(c, events, 0, L, static_cast<double>(L) / t);
    est_bb = estimate_betas(learn, c.sample_rate, CounterRng::derive(sc.seed, 2));
  }

  std::vector<ArmRun> out;
  for (Arm arm : c.arms) {
    Logs logs = arm == Arm::fp_pace ? run_fp_pace(c, test, price_win, est_ub)
                                    : run_budget_pacing(c, arm, test, price_win, est_bb);
    ArmRun run;
    run.arm = arm;
    run.replica = replica;
    run.metrics = compute_metrics(test, logs.sent, logs.trace, logs.bids);
    run.spend = std::move(logs.spend);
    run.spend_p = logs.spend_p;
    run.max_charge = logs.max_charge;
    run.priced_rejections = logs.priced_out;
    std::vector<double> x(logs.sent.begin(), logs.sent.end());
    run.events.assign(test.events().begin(), test.events().end());
    run.sent = std::move(logs.sent);
    run.bids = std::move(logs.bids);
    run.prices = std::move(logs.prices);
    run.type_charges = std::move(logs.type_charges);
    run.platform_charges = std::move(logs.platform_charges);
    run.utilities = utilities(test, x).u;
    run.trace = std::move(logs.trace);
    out.push_back(std::move(run));
  }
  return out;
}

std::vector<ArmRun> run_experiment(const ExperimentConfig& config) {
  std::vector<ArmRun> all;
  for (int r = 0; r < config.replicas; ++r) {
    auto runs = run_replica(config, r);
    for (auto& run : runs) all.push_back(std::move(run));
  }
  return all;
}

Excursion excursion_of(const ArmRun& run, std::int64_t shift_step, std::int64_t baseline) {
  const auto steps = static_cast<std::int64_t>(run.trace.size());
  if (shift_step <= 0 || shift_step >= steps) {
    throw InvalidInstance("shift must fall strictly inside the test window");
  }
  const std::size_t n = run.metrics.multiplier_stddev.size();
  Excursion ex;
  ex.arm = run.arm;
  ex.replica = run.replica;
  ex.stddev = run.metrics.multiplier_stddev;
  ex.stddev_clipped = run.metrics.multiplier_stddev_clipped;
  const std::int64_t from = std::max<std::int64_t>(0, shift_step - baseline);
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = trace_column(run.trace, i);
    const std::span<const double> base(col.data() + from, col.data() + shift_step);
    const double ref = std::max(percentile(base, 50.0), 1e-300);
    double worst = 0.0;
    for (auto k = static_cast<std::size_t>(shift_step); k < col.size(); ++k) {
      worst = std::max(worst, std::abs(col[k] - ref) / ref);
    }
    ex.excursion.push_back(worst);
  }
  return ex;
}

std::vector<Excursion> stability_study(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.finalize();
  if (!c.stream.shift) throw InvalidInstance("stability study needs a shift");
  const std::int64_t rel = c.stream.shift->at_step - c.learning_window;
  std::vector<Excursion> out;
  for (const ArmRun& run : run_experiment(c)) {
    out.push_back(excursion_of(run, rel, c.baseline_window));
  }
  return out;
}

json to_json(const MetricsReport& r) {
  return {{"avg_winning_valuation", r.avg_winning_valuation},
          {"avg_winning_bid", r.avg_winning_bid},
          {"sent_total", r.sent_total},
          {"sent_per_type", r.sent_per_type},
          {"violation_rate_s", r.violation_rate_s},
          {"violation_rate_2s", r.violation_rate_2s},
          {"violation_avg_per_user", r.violation_avg_per_user},
          {"wastage_rate", r.wastage_rate},
          {"wastage_avg_per_user", r.wastage_avg_per_user},
          {"multiplier_stddev", r.multiplier_stddev},
          {"multiplier_stddev_clipped", r.multiplier_stddev_clipped}};
}

std::string trace_csv(const MultiplierTrace& trace) {
  std::ostringstream out;
  const std::size_t cols = trace.empty() ? 0 : trace.front().size();
  out << "t";
  for (std::size_t i = 0; i + 1 < cols; ++i) out << ",beta_" << (i + 1);
  if (cols > 0) out << ",beta_p";
  out << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << (k + 1);
    for (double b : trace[k]) out << ',' << format_double(b);
    out << '\n';
  }
  return out.str();
}

std::string step_csv(const ArmRun& run) {
  const std::size_t steps = run.events.size();
  if (run.sent.size() != steps || run.bids.size() != steps || run.prices.size() != steps ||
      run.type_charges.size() != steps || run.platform_charges.size() != steps ||
      run.trace.size() != steps) {
    throw InvalidInstance("step_csv: logs are not aligned with the events");
  }
  std::ostringstream out;
  const std::size_t cols = steps == 0 ? 0 : run.trace.front().size();
  out << "t,type_id,user_id,v,v_p,sent,bid,price,type_charge,platform_charge";
  for (std::size_t i = 0; i + 1 < cols; ++i) out << ",beta_" << (i + 1);
  if (cols > 0) out << ",beta_p";
  out << '\n';
  for (std::size_t k = 0; k < steps; ++k) {
    const Event& e = run.events[k];
    out << e.t << ',' << e.type + 1 << ',' << e.user + 1 << ',' << format_double(e.v) << ','
        << format_double(e.v_p) << ',' << int{run.sent[k]} << ',' << format_double(run.bids[k])
        << ',' << format_double(run.prices[k]) << ',' << format_double(run.type_charges[k])
        << ',' << format_double(run.platform_charges[k]);
    for (double b : run.trace[k]) out << ',' << format_double(b);
    out << '\n';
  }
  return out.str();
}

std::string comparison_table(const std::vector<ArmRun>& runs) {
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& r : runs) n = std::max(n, r.metrics.multiplier_stddev.size());
  out << "arm,replica,avg_winning_valuation,sent_total,violation_rate_s,"
         "violation_rate_2s,violation_avg_per_user,wastage_rate,wastage_avg_per_user";
  for (std::size_t i = 0; i < n; ++i) out << ",sent_" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) out << ",stddev_" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) out << ",stddev_clipped_" << (i + 1);
  out << '\n';
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    out << arm_name(r.arm) << ',' << r.replica << ',' << format_double(m.avg_winning_valuation)
        << ',' << m.sent_total << ',' << format_double(m.violation_rate_s) << ','
        << format_double(m.violation_rate_2s) << ',' << format_double(m.violation_avg_per_user)
        << ',' << format_double(m.wastage_rate) << ',' << format_double(m.wastage_avg_per_user);
    for (auto s : m.sent_per_type) out << ',' << s;
    for (double s : m.multiplier_stddev) out << ',' << format_double(s);
    for (double s : m.multiplier_stddev_clipped) out << ',' << format_double(s);
    out << '\n';
  }
  return out.str();
}

}  // namespace notif
