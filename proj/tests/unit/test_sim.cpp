#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "notif/eg.hpp"
#include "notif/error.hpp"
#include "notif/pace.hpp"
#include "notif/sim.hpp"

using namespace notif;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig c = default_experiment();
  c.stream.m = 200;
  c.stream.horizon = 6000;
  c.budgets = {20.0, 300.0, 250.0, 400.0};
  c.update_every = 50;
  c.baseline_window = 200;
  c.finalize();
  return c;
}

}  // namespace

TEST_CASE("stream events are a pure function of seed and position") {
  StreamConfig sc = default_experiment().stream;
  sc.horizon = 500;
  const auto all = generate_events(sc);
  const StreamGenerator gen(sc);
  for (std::int64_t k : {0, 1, 17, 250, 499}) CHECK(gen.at(k) == all[k]);
  CHECK(generate_events(sc) == all);
  sc.seed = 2;
  CHECK(generate_events(sc) != all);
}

TEST_CASE("a shift with unit factors changes nothing") {
  StreamConfig sc = default_experiment().stream;
  sc.horizon = 2000;
  const auto plain = generate_events(sc);
  sc.shift = Shift{1000, {1.0, 1.0, 1.0, 1.0}};
  CHECK(generate_events(sc) == plain);

  sc.shift = Shift{1000, {1.0, 0.5, 1.0, 1.0}};
  const auto shifted = generate_events(sc);
  for (std::size_t k = 0; k < plain.size(); ++k) {
    const double f = (k >= 1000 && plain[k].type == 1) ? 0.5 : 1.0;
    CHECK(shifted[k].v == doctest::Approx(plain[k].v * f));
    CHECK(shifted[k].user == plain[k].user);
  }
}

TEST_CASE("uniform user sampling passes a chi-square test") {
  StreamConfig sc;
  sc.n = 1;
  sc.m = 10;
  sc.horizon = 100000;
  sc.user_skew = 0.0;
  sc.value_dist = {ValueDist::uniform(0.0, 1.0)};
  std::vector<double> counts(sc.m, 0.0);
  for (const Event& e : generate_events(sc)) counts[e.user] += 1.0;
  const double expected = static_cast<double>(sc.horizon) / static_cast<double>(sc.m);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99.9% quantile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 27.88);
}

TEST_CASE("type weights and value laws") {
  StreamConfig sc = default_experiment().stream;
  sc.horizon = 200000;
  std::vector<double> count(sc.n, 0.0), sum(sc.n, 0.0);
  for (const Event& e : generate_events(sc)) {
    count[e.type] += 1.0;
    sum[e.type] += e.v;
    CHECK(e.v >= 0.0);
    CHECK(e.v <= 1.0);
  }
  for (std::size_t i = 0; i < sc.n; ++i) {
    CHECK(count[i] / 200000.0 == doctest::Approx(sc.type_weights[i]).epsilon(0.05));
    CHECK(sum[i] / count[i] == doctest::Approx(sc.value_dist[i].mean()).epsilon(0.02));
  }
  CHECK(ValueDist::kumaraswamy(1.0, 1.0).sample(0.3) == doctest::Approx(0.3));
  CHECK_THROWS_AS(ValueDist::uniform(0.5, 1.5).validate(), InvalidInstance);
  CHECK_THROWS_AS(ValueDist::kumaraswamy(0.0, 1.0).validate(), InvalidInstance);
}

TEST_CASE("generated stream becomes a valid instance") {
  StreamConfig sc = default_experiment().stream;
  sc.m = 50;
  sc.horizon = 3000;
  const auto inst = generate_stream(sc, {1, 2, 3, 4}, 0.0, std::vector<std::int64_t>(50, 5));
  CHECK(inst.horizon() == 3000);
  CHECK(inst.event(0).t == 1);
  CHECK(inst.event(2999).t == 3000);
}

TEST_CASE("experiment config round trip and validation") {
  auto c = small_experiment();
  c.stream.shift = Shift{5000, {1.0, 0.5, 1.0, 1.0}};
  c.arms = {Arm::sp_budget_pacing};
  c.clamp_mode = ClampMode::delta0;
  const auto back = experiment_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  auto doc = to_json(c);
  doc["bogus"] = 1;
  CHECK_THROWS_AS(experiment_from_json(doc), InvalidInstance);

  auto bad = small_experiment();
  bad.test_window = 10000;
  CHECK_THROWS_AS(bad.finalize(), InvalidInstance);
  bad = small_experiment();
  bad.replicas = 0;
  CHECK_THROWS_AS(bad.finalize(), InvalidInstance);
  CHECK_THROWS_AS(parse_arm("fp"), InvalidInstance);
}

TEST_CASE("experiments are deterministic") {
  auto c = small_experiment();
  c.replicas = 2;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  REQUIRE(a.size() == 6);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].trace == b[k].trace);
    CHECK(to_json(a[k].metrics) == to_json(b[k].metrics));
  }
  CHECK(comparison_table(a) == comparison_table(b));
  // Replica r does not depend on how many replicas run.
  c.replicas = 1;
  const auto one = run_experiment(c);
  for (std::size_t k = 0; k < one.size(); ++k) CHECK(one[k].trace == a[k].trace);
}

// Prices stay at zero, so nothing is priced out. First-price arms may still
// drop events once a budget is spent; the second-price arm pays zero prices
// and never runs dry.
TEST_CASE("ample supply means no violation and no priced wastage") {
  auto c = small_experiment();
  c.supply = 100000;
  for (const ArmRun& run : run_experiment(c)) {
    CAPTURE(arm_name(run.arm));
    CHECK(run.metrics.violation_rate_s == 0.0);
    CHECK(run.metrics.violation_avg_per_user == 0.0);
    CHECK(run.priced_rejections == 0);
    if (run.arm == Arm::sp_budget_pacing) {
      CHECK(run.metrics.wastage_rate == 0.0);
      CHECK(run.metrics.wastage_avg_per_user == 0.0);
    }
  }
}

TEST_CASE("spend overshoots a budget by at most one charge") {
  auto c = small_experiment();
  c.replicas = 3;
  for (const ArmRun& run : run_experiment(c)) {
    CAPTURE(arm_name(run.arm));
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
      CHECK(run.spend[i] <= c.budgets[i] + run.max_charge + 1e-9);
    }
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
      CHECK(run.metrics.multiplier_stddev_clipped[i] <= run.metrics.multiplier_stddev[i] + 1e-12);
      CHECK(run.metrics.multiplier_stddev[i] >= 0.0);
    }
  }
}

TEST_CASE("stability study") {
  auto c = small_experiment();
  const std::int64_t at = c.learning_window + c.test_window / 2;

  c.stream.shift = Shift{at, {1.0, 1.0, 1.0, 1.0}};
  const auto unit = stability_study(c);
  c.stream.shift.reset();
  const auto runs = run_experiment(c);
  REQUIRE(unit.size() == runs.size());
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto plain = excursion_of(runs[k], at - c.learning_window, c.baseline_window);
    CHECK(unit[k].excursion == plain.excursion);
    for (std::size_t i = 0; i < plain.stddev.size(); ++i) {
      CHECK(unit[k].stddev_clipped[i] <= unit[k].stddev[i] + 1e-12);
    }
  }

  CHECK_THROWS_AS(stability_study(c), InvalidInstance);
  c.stream.shift = Shift{10, {1.0, 0.5, 1.0, 1.0}};
  CHECK_THROWS_AS(stability_study(c), InvalidInstance);
}

TEST_CASE("excursion of a hand-made trace") {
  ArmRun run;
  run.metrics.multiplier_stddev = {0.0};
  run.metrics.multiplier_stddev_clipped = {0.0};
  for (int k = 0; k < 10; ++k) run.trace.push_back({2.0, 0.0});
  run.trace[7][0] = 3.0;
  run.trace[8][0] = 1.5;
  const auto ex = excursion_of(run, 5, 5);
  CHECK(ex.excursion[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(excursion_of(run, 0, 5), InvalidInstance);
}

TEST_CASE("PACE with hindsight prices tracks the hindsight utilities") {
  StreamConfig sc = default_experiment().stream;
  sc.m = 300;
  sc.horizon = 10000;
  const std::vector<double> budgets{20.0, 700.0, 577.0, 890.0};
  const auto inst = generate_stream(sc, budgets, 0.0, std::vector<std::int64_t>(sc.m, 5));
  const auto eg = solve_eg(inst);

  const double t = static_cast<double>(inst.horizon());
  std::vector<double> per_step(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) per_step[i] = budgets[i] / t;
  const auto [floors, floor_p] = pace_floors(inst);
  PaceState state = make_pace_state(per_step, 0.0, floors, floor_p);
  const auto run = run_pace(state, inst.events(), PriceBook(eg.user_prices));

  std::vector<double> x(run.sent.begin(), run.sent.end());
  const auto got = utilities(inst, x);
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    CAPTURE(i);
    CHECK(got.u[i] == doctest::Approx(eg.utils.u[i]).epsilon(0.05));
  }
}

TEST_CASE("step logs add up to the reported spend") {
  const auto c = small_experiment();
  for (const ArmRun& run : run_experiment(c)) {
    CAPTURE(arm_name(run.arm));
    const std::size_t T = run.events.size();
    REQUIRE(T == static_cast<std::size_t>(c.test_window));
    std::vector<double> spend(c.budgets.size(), 0.0);
    double spend_p = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      if (!run.sent[k]) {
        CHECK(run.type_charges[k] == 0.0);
        CHECK(run.platform_charges[k] == 0.0);
      }
      spend[run.events[k].type] += run.type_charges[k];
      spend_p += run.platform_charges[k];
    }
    for (std::size_t i = 0; i < spend.size(); ++i) CHECK(spend[i] == doctest::Approx(run.spend[i]).epsilon(1e-9));
    CHECK(spend_p == doctest::Approx(run.spend_p).epsilon(1e-9));
    const std::string csv = step_csv(run);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(T) + 1);
  }
}
