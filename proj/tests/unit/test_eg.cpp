#include <cmath>

#include "doctest.h"
#include "notif/eg.hpp"
#include "notif/error.hpp"
#include "support.hpp"

using namespace notif;

namespace {

MarketInstance symmetric_pair() {
  return MarketInstance(2, 1, {1.0, 1.0}, 0.0, {1},
                        {{1, 0, 0, 1.0, 0.0}, {2, 1, 0, 1.0, 0.0}});
}

MarketInstance single_event() {
  return MarketInstance(1, 1, {1.0}, 0.0, {1}, {{1, 0, 0, 1.0, 0.0}});
}

}  // namespace

TEST_CASE("single buyer takes the only event") {
  const auto sol = solve_eg(single_event());
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.betas[0] == doctest::Approx(1.0));
  CHECK(sol.user_prices[0] == doctest::Approx(1.0));
  CHECK(sol.event_lambdas[0] == doctest::Approx(0.0));
  CHECK(sol.event_prices[0] == doctest::Approx(1.0));
}

TEST_CASE("symmetric pair splits the slot") {
  const auto sol = solve_eg(symmetric_pair());
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.x[1] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.betas[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.betas[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.user_prices[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.event_lambdas[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.event_lambdas[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-9));
  CHECK(verify_nfppe(sol, symmetric_pair(), 1e-6).all_passed());
}

TEST_CASE("oracle on small instances") {
  const auto oracle = eg_oracle(symmetric_pair(), 0.01);
  CHECK(oracle.objective == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-9));
  const auto one = eg_oracle(single_event(), 0.05);
  CHECK(one.x[0] == 1.0);
  CHECK_THROWS_AS(eg_oracle(symmetric_pair(), 0.03), InvalidInstance);

  std::vector<Event> many;
  for (int t = 1; t <= 5; ++t) many.push_back({t, 0, 0, 0.5, 0.0});
  CHECK_THROWS_AS(eg_oracle(MarketInstance(1, 1, {1.0}, 0.0, {1}, many), 0.05),
                  InvalidInstance);
}

TEST_CASE("asymmetric pair matches the oracle") {
  const MarketInstance inst(2, 1, {1.0, 1.0}, 0.0, {1},
                            {{1, 0, 0, 1.0, 0.0}, {2, 1, 0, 0.5, 0.0}});
  const auto sol = solve_eg(inst);
  const auto oracle = eg_oracle(inst, 0.01);
  CHECK(std::abs(sol.objective - oracle.objective) < 1e-3);
  CHECK(sol.objective >= oracle.objective - 1e-12);
}

TEST_CASE("solver dominates the grid oracle on random tiny instances") {
  CounterRng rng(11);
  testing::InstanceShape shape;
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    const auto sol = solve_eg(inst);
    const auto oracle = eg_oracle(inst, 0.05);
    CHECK(sol.objective >= oracle.objective - 1e-9);
  }
}

TEST_CASE("dual objective plug-in values") {
  const auto inst = symmetric_pair();
  const std::vector<double> p{2.0}, b{2.0, 2.0};
  CHECK(dual_objective(inst, p, b, 0.0) ==
        doctest::Approx(2.0 - 2.0 * std::log(2.0)));
  const std::vector<double> high{10.0};
  CHECK(dual_objective(inst, high, b, 0.0) ==
        doctest::Approx(10.0 - 2.0 * std::log(2.0)));
  const std::vector<double> zero_beta{0.0, 2.0};
  CHECK(std::isinf(dual_objective(inst, p, zero_beta, 0.0)));
}

TEST_CASE("primal and dual differ by the budget constant") {
  CounterRng rng(5);
  testing::InstanceShape shape{5, 10, 1, 100};
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    const auto sol = solve_eg(inst);
    const double dual = dual_objective(inst, sol.user_prices, sol.betas, sol.beta_p);
    CHECK(std::abs(sol.objective - dual - duality_constant(inst)) < 1e-6);
  }
}

TEST_CASE("verify_nfppe on random instances") {
  CounterRng rng(7);
  testing::InstanceShape shape{5, 10, 1, 100};
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    const auto sol = solve_eg(inst);
    const auto report = verify_nfppe(sol, inst, 1e-4);
    for (const auto& c : report.checks) {
      INFO(c.name << " residual " << c.residual << " " << c.detail);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("verify_nfppe rejects corrupted solutions") {
  const auto inst = symmetric_pair();
  auto sol = solve_eg(inst);
  auto doubled = sol;
  doubled.betas[0] *= 2.0;
  CHECK_FALSE(verify_nfppe(doubled, inst, 1e-4).passed("budget_clearing"));
  auto empty = sol;
  std::fill(empty.x.begin(), empty.x.end(), 0.0);
  CHECK_FALSE(verify_nfppe(empty, inst, 1e-4).passed("supply"));
}

TEST_CASE("scaling budgets scales multipliers and keeps x") {
  CounterRng rng(3);
  testing::InstanceShape shape{4, 5, 5, 40};
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = testing::random_instance(rng, shape);
    std::vector<double> b(inst.budgets().begin(), inst.budgets().end());
    for (double& v : b) v *= 3.0;
    const auto scaled = inst.with_budgets(b, inst.platform_budget() * 3.0);
    const auto s1 = solve_eg(inst);
    const auto s3 = solve_eg(scaled);
    for (std::size_t k = 0; k < inst.horizon(); ++k) {
      CHECK(s3.x[k] == doctest::Approx(s1.x[k]).epsilon(1e-4));
    }
    for (std::size_t i = 0; i < inst.n(); ++i) {
      CHECK(s3.betas[i] == doctest::Approx(3.0 * s1.betas[i]).epsilon(1e-4));
    }
  }
}

TEST_CASE("platform without valued events is infeasible") {
  const MarketInstance inst(1, 1, {1.0}, 1.0, {1}, {{1, 0, 0, 1.0, 0.0}});
  CHECK_THROWS_AS(solve_eg(inst), Infeasible);
}

TEST_CASE("json round trip") {
  const auto sol = solve_eg(symmetric_pair());
  const auto back = eg_solution_from_json(to_json(sol));
  CHECK(back.x == sol.x);
  CHECK(back.betas == sol.betas);
  CHECK(back.user_prices == sol.user_prices);
  CHECK(back.utils.u == sol.utils.u);
}
