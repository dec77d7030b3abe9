#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "notif/error.hpp"
#include "notif/io.hpp"
#include "notif/market.hpp"
#include "notif/metrics.hpp"
#include "support.hpp"

using namespace notif;
namespace fs = std::filesystem;

namespace {

MarketInstance one_user(std::vector<std::size_t> types, std::vector<double> v,
                        std::vector<double> budgets, double bp, std::int64_t s,
                        std::vector<double> vp = {}) {
  std::vector<Event> ev;
  for (std::size_t k = 0; k < types.size(); ++k) {
    ev.push_back({static_cast<std::int64_t>(k + 1), types[k], 0, v[k],
                  vp.empty() ? 0.0 : vp[k]});
  }
  const std::size_t n = budgets.size();
  return MarketInstance(n, 1, std::move(budgets), bp, {s}, std::move(ev));
}

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "notif_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Direct transcription of the metric definitions, one pass per quantity.
MetricsReport naive_metrics(const MarketInstance& inst, const std::vector<std::uint8_t>& sent,
                            const MultiplierTrace& trace, const std::vector<double>& bids) {
  MetricsReport r;
  double vsum = 0.0, bsum = 0.0;
  r.sent_per_type.assign(inst.n(), 0);
  for (std::size_t k = 0; k < sent.size(); ++k) {
    if (!sent[k]) continue;
    vsum += inst.event(k).v;
    bsum += bids[k];
    ++r.sent_total;
    ++r.sent_per_type[inst.event(k).type];
  }
  if (r.sent_total > 0) {
    r.avg_winning_valuation = vsum / static_cast<double>(r.sent_total);
    r.avg_winning_bid = bsum / static_cast<double>(r.sent_total);
  }
  const double m = static_cast<double>(inst.m());
  for (std::size_t j = 0; j < inst.m(); ++j) {
    std::int64_t got = 0, rejected = 0;
    for (std::size_t k = 0; k < sent.size(); ++k) {
      if (inst.event(k).user != j) continue;
      if (sent[k]) {
        ++got;
      } else {
        ++rejected;
      }
    }
    const std::int64_t s = inst.supply(j);
    if (got > s) r.violation_rate_s += 1.0 / m;
    if (got > 2 * s) r.violation_rate_2s += 1.0 / m;
    r.violation_avg_per_user += static_cast<double>(std::max<std::int64_t>(0, got - s)) / m;
    const std::int64_t waste = std::max<std::int64_t>(0, std::min(s - got, rejected));
    if (waste > 0) r.wastage_rate += 1.0 / m;
    r.wastage_avg_per_user += static_cast<double>(waste) / m;
  }
  for (std::size_t i = 0; i < inst.n(); ++i) {
    std::vector<double> col;
    for (const auto& row : trace) col.push_back(row[i]);
    double mean = 0.0;
    for (double x : col) mean += x;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double x : col) var += (x - mean) * (x - mean);
    r.multiplier_stddev.push_back(std::sqrt(var / static_cast<double>(col.size())));
  }
  return r;
}

}  // namespace

TEST_CASE("utilities") {
  const auto single = one_user({0}, {0.7}, {1.0}, 1.0, 1, {0.2});
  const std::vector<double> one{1.0};
  const auto u = utilities(single, one);
  CHECK(u.u[0] == doctest::Approx(0.7));
  CHECK(u.u_p == doctest::Approx(0.2));

  const auto three = one_user({0, 0, 0}, {0.5, 0.3, 0.2}, {1.0}, 0.0, 3);
  const std::vector<double> x{1.0, 0.0, 0.5};
  CHECK(utilities(three, x).u[0] == doctest::Approx(0.6));
  const std::vector<double> zero(3, 0.0);
  CHECK(utilities(three, zero).u[0] == 0.0);
  const std::vector<double> short_x{1.0};
  CHECK_THROWS_AS(utilities(three, short_x), InvalidInstance);
}

TEST_CASE("utilities are linear in x") {
  CounterRng rng(21);
  testing::InstanceShape shape{4, 4, 1, 20};
  for (int rep = 0; rep < 50; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    std::vector<double> a(inst.horizon()), b(inst.horizon()), ab(inst.horizon());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = 0.5 * rng.uniform();
      b[k] = 0.5 * rng.uniform();
      ab[k] = a[k] + b[k];
    }
    const auto ua = utilities(inst, a), ub = utilities(inst, b), uab = utilities(inst, ab);
    for (std::size_t i = 0; i < inst.n(); ++i) {
      CHECK(uab.u[i] == doctest::Approx(ua.u[i] + ub.u[i]).epsilon(1e-12));
    }
    CHECK(uab.u_p == doctest::Approx(ua.u_p + ub.u_p).epsilon(1e-12));
  }
}

TEST_CASE("instance invariants") {
  std::vector<Event> gap{{1, 0, 0, 1.0, 0.0}, {3, 0, 0, 1.0, 0.0}};
  CHECK_THROWS_AS(MarketInstance(1, 1, {1.0}, 0.0, {1}, gap), InvalidInstance);
  std::vector<Event> missing_type{{1, 0, 0, 1.0, 0.0}};
  CHECK_THROWS_AS(MarketInstance(2, 1, {1.0, 1.0}, 0.0, {1}, missing_type),
                  InvalidInstance);
  std::vector<Event> ok{{1, 0, 0, 1.0, 0.0}};
  CHECK_THROWS_AS(MarketInstance(1, 1, {0.0}, 0.0, {1}, ok), InvalidInstance);
  CHECK_THROWS_AS(MarketInstance(1, 1, {1.0}, 0.0, {0}, ok), InvalidInstance);
  std::vector<Event> negative{{1, 0, 0, -0.1, 0.0}};
  CHECK_THROWS_AS(MarketInstance(1, 1, {1.0}, 0.0, {1}, negative), InvalidInstance);
}

TEST_CASE("proportional benchmarks") {
  const auto sym = one_user({0, 1}, {1.0, 1.0}, {1.0, 1.0}, 0.0, 1);
  const auto b = proportional_benchmarks(sym);
  CHECK(b.u[0] == doctest::Approx(0.5));
  CHECK(b.u[1] == doctest::Approx(0.5));
  CHECK(b.u_p == 0.0);

  // B_p equal to the type budgets, s = 2, four events valued 1 by the platform.
  const auto plat = one_user({0, 0, 0, 0}, {1, 1, 1, 1}, {1.0}, 1.0, 2, {1, 1, 1, 1});
  CHECK(proportional_benchmarks(plat).u_p == doctest::Approx(1.0));

  const auto unpadded = one_user({0}, {1.0}, {1.0}, 0.0, 2);
  CHECK_THROWS_AS(proportional_benchmarks(unpadded), InvalidInstance);
  const auto padded = pad_for_benchmarks(unpadded);
  CHECK(is_padded(padded));
  CHECK(padded.horizon() == 2);
  CHECK(padded.event(1).v == 0.0);
}

TEST_CASE("benchmarks are invariant to budget scaling") {
  CounterRng rng(5);
  testing::InstanceShape shape{3, 3, 3, 12};
  for (int rep = 0; rep < 30; ++rep) {
    const auto inst = pad_for_benchmarks(testing::random_instance(rng, shape));
    const double c = 0.1 + 10.0 * rng.uniform();
    std::vector<double> scaled(inst.budgets().begin(), inst.budgets().end());
    for (double& x : scaled) x *= c;
    const auto a = proportional_benchmarks(inst);
    const auto b = proportional_benchmarks(inst.with_budgets(scaled, inst.platform_budget() * c));
    for (std::size_t i = 0; i < inst.n(); ++i) CHECK(b.u[i] == doctest::Approx(a.u[i]));
    CHECK(b.u_p == doctest::Approx(a.u_p));
  }
}

TEST_CASE("second-price proportional share") {
  const auto top2 = one_user({0, 0, 0}, {0.9, 0.5, 0.1}, {1.0}, 0.0, 2);
  CHECK(sp_proportional_share(top2)[0] == doctest::Approx(1.4));

  // f_1 = 0.5 and s = 1: half a unit spent on the 1.0 opportunity.
  const auto half = one_user({0, 0, 1}, {1.0, 0.2, 0.3}, {1.0, 1.0}, 0.0, 1);
  CHECK(sp_proportional_share(half)[0] == doctest::Approx(0.5));

  // A type needs some positive value somewhere, so the zero-valued user is
  // checked by its contribution: adding it leaves the share unchanged.
  std::vector<Event> base{{1, 0, 1, 0.8, 0.0}};
  std::vector<Event> with_zeros{{1, 0, 0, 0.0, 0.0}, {2, 0, 0, 0.0, 0.0}, {3, 0, 1, 0.8, 0.0}};
  const MarketInstance a(1, 2, {1.0}, 0.0, {1, 1}, base);
  const MarketInstance b(1, 2, {1.0}, 0.0, {1, 1}, with_zeros);
  CHECK(sp_proportional_share(pad_for_benchmarks(b))[0] ==
        doctest::Approx(sp_proportional_share(pad_for_benchmarks(a))[0]));
}

TEST_CASE("metrics examples") {
  // User 0 has s = 5 and 7 sends; user 1 has everything sent within supply.
  std::vector<Event> ev;
  for (int k = 0; k < 7; ++k) ev.push_back({k + 1, 0, 0, 0.5, 0.0});
  ev.push_back({8, 0, 1, 0.25, 0.0});
  const MarketInstance inst(1, 2, {1.0}, 0.0, {5, 5}, ev);
  const std::vector<std::uint8_t> sent(8, 1);
  const std::vector<double> bids(8, 0.1);
  const MultiplierTrace flat(8, std::vector<double>{1.5, 0.0});
  const auto r = compute_metrics(inst, sent, flat, bids);
  CHECK(r.violation_rate_s == doctest::Approx(0.5));
  CHECK(r.violation_rate_2s == 0.0);
  CHECK(r.violation_avg_per_user == doctest::Approx(1.0));
  CHECK(r.wastage_rate == 0.0);
  CHECK(r.multiplier_stddev[0] == 0.0);
  CHECK(r.multiplier_stddev_clipped[0] == 0.0);
  CHECK(r.avg_winning_valuation == doctest::Approx((7 * 0.5 + 0.25) / 8));

  const std::vector<std::uint8_t> short_log(3, 1);
  CHECK_THROWS_AS(compute_metrics(inst, short_log, flat, bids), InvalidInstance);
}

TEST_CASE("metrics match a naive recomputation") {
  CounterRng rng(77);
  testing::InstanceShape shape{4, 6, 5, 60};
  shape.max_supply = 4;
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    std::vector<std::uint8_t> sent(inst.horizon());
    std::vector<double> bids(inst.horizon());
    for (std::size_t k = 0; k < sent.size(); ++k) {
      sent[k] = rng.uniform() < 0.6 ? 1 : 0;
      bids[k] = rng.uniform();
    }
    MultiplierTrace trace(1 + rng.below(30), std::vector<double>(inst.n() + 1));
    for (auto& row : trace) {
      for (double& b : row) b = 3.0 * rng.uniform();
    }
    const auto got = compute_metrics(inst, sent, trace, bids);
    const auto want = naive_metrics(inst, sent, trace, bids);
    CHECK(got.sent_total == want.sent_total);
    CHECK(got.sent_per_type == want.sent_per_type);
    CHECK(got.avg_winning_valuation == doctest::Approx(want.avg_winning_valuation));
    CHECK(got.avg_winning_bid == doctest::Approx(want.avg_winning_bid));
    CHECK(got.violation_rate_s == doctest::Approx(want.violation_rate_s));
    CHECK(got.violation_rate_2s == doctest::Approx(want.violation_rate_2s));
    CHECK(got.violation_avg_per_user == doctest::Approx(want.violation_avg_per_user));
    CHECK(got.wastage_rate == doctest::Approx(want.wastage_rate));
    CHECK(got.wastage_avg_per_user == doctest::Approx(want.wastage_avg_per_user));
    for (std::size_t i = 0; i < inst.n(); ++i) {
      CHECK(got.multiplier_stddev[i] == doctest::Approx(want.multiplier_stddev[i]));
      CHECK(got.multiplier_stddev_clipped[i] <= got.multiplier_stddev[i] + 1e-12);
    }
    CHECK(got.violation_rate_s >= 0.0);
    CHECK(got.violation_rate_s <= 1.0);
    CHECK(got.wastage_rate <= 1.0);
  }
}

TEST_CASE("percentile and clipping") {
  const std::vector<double> xs{4, 1, 3, 2, 5};
  CHECK(percentile(xs, 0.0) == 1.0);
  CHECK(percentile(xs, 50.0) == 3.0);
  CHECK(percentile(xs, 100.0) == 5.0);
  CHECK(percentile(xs, 25.0) == 2.0);
  std::vector<double> spiky(100, 1.0);
  spiky[50] = 100.0;
  CHECK(clipped_stddev(spiky) < stddev(spiky));
}

TEST_CASE("event log round trip") {
  CounterRng rng(3);
  testing::InstanceShape shape{3, 5, 10, 40};
  const auto inst = testing::random_instance(rng, shape);
  const auto dir = scratch_dir("roundtrip");
  write_instance(dir / "instance.json", inst);
  CHECK(read_instance(dir / "instance.json") == inst);
}

TEST_CASE("event log parse errors name the line") {
  const auto dir = scratch_dir("parse");
  const auto path = dir / "events.csv";

  write_text(path, "t,type_id,user_id,v,v_p\n1,1,1,0.5,0\n2,1,1,abc,0\n");
  try {
    read_event_log(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  write_text(path, "t,type_id,user_id,v,v_p\n1,1,1,0.5\n");
  try {
    read_event_log(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  write_text(path, "time,type,user,v,vp\n");
  CHECK_THROWS_AS(read_event_log(path), ParseError);

  write_text(path, "t,type_id,user_id,v,v_p\n1,0,1,0.5,0\n");
  CHECK_THROWS_AS(read_event_log(path), ParseError);
}

TEST_CASE("instance file errors") {
  const auto dir = scratch_dir("instance");
  write_text(dir / "events.csv", "t,type_id,user_id,v,v_p\n1,1,1,0.5,0\n");
  write_text(dir / "bad.json", "{\"n\": 1, ");
  CHECK_THROWS_AS(read_instance(dir / "bad.json"), ParseError);
  write_text(dir / "two_types.json",
             R"({"n": 2, "m": 1, "budgets": [1, 1], "platform_budget": 0,
                 "supply": 1, "events": "events.csv"})");
  CHECK_THROWS_AS(read_instance(dir / "two_types.json"), InvalidInstance);
}
