#include "notif/eg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "notif/error.hpp"
#include "notif/pga.hpp"

namespace notif {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double bid_of(const Event& e, std::span<const double> betas, double beta_p) {
  return betas[e.type] * e.v + beta_p * e.v_p;
}

}  // namespace

double eg_objective(const MarketInstance& inst, std::span<const double> x) {
  const auto u = utilities(inst, x);
  double f = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (u.u[i] <= 0.0) return -kInf;
    f += inst.budget(i) * std::log(u.u[i]);
  }
  if (inst.platform_budget() > 0.0) {
    if (u.u_p <= 0.0) return -kInf;
    f += inst.platform_budget() * std::log(u.u_p);
  }
  return f;
}

EgSolution solve_eg(const MarketInstance& inst, const EgOptions& opts) {
  if (inst.platform_budget() > 0.0) {
    bool any = false;
    for (const Event& e : inst.events()) any = any || e.v_p > 0.0;
    if (!any) {
      throw Infeasible("platform has a positive budget but values no event");
    }
  }
  LogUtilityProblem prob;
  prob.budgets.assign(inst.budgets().begin(), inst.budgets().end());
  prob.platform_budget = inst.platform_budget();
  prob.group_cap.resize(inst.m());
  for (std::size_t j = 0; j < inst.m(); ++j) {
    prob.group_cap[j] = static_cast<double>(inst.supply(j));
  }
  std::vector<double> x0(inst.horizon());
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    const Event& e = inst.event(k);
    prob.owner.push_back(e.type);
    prob.value.push_back(e.v);
    prob.platform_value.push_back(e.v_p);
    prob.group.push_back(e.user);
    const double load = static_cast<double>(inst.events_of_user(e.user).size());
    x0[k] = std::min(1.0, static_cast<double>(inst.supply(e.user)) / load);
  }

  PgaOptions popts;
  popts.tol = opts.tol;
  popts.max_iters = opts.max_iters;
  PgaResult res = maximize_log_utility(prob, std::move(x0), popts);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "hindsight solver stopped after " << res.iterations
        << " iterations with residual " << res.residual << " > " << opts.tol;
    throw NonConvergence(msg.str(), res.residual);
  }
  if (res.floor_active) {
    throw Infeasible("solution relies on the utility floor; some buyer "
                     "cannot obtain positive utility");
  }

  // Leftover capacity can only be filled by events whose bid is zero (any
  // positive-bid event is already at 1). Filling it leaves the objective
  // unchanged and makes caps bind as in the equilibrium supply condition.
  Allocation x = std::move(res.x);
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const auto idx = inst.events_of_user(j);
    double load = 0.0;
    for (std::size_t k : idx) load += x[k];
    double room = static_cast<double>(inst.supply(j)) - load;
    for (std::size_t k : idx) {
      if (room <= 0.0) break;
      const double add = std::min(1.0 - x[k], room);
      x[k] += add;
      room -= add;
    }
  }

  EgSolution sol = recover_duals(inst, x);
  sol.iterations = res.iterations;
  sol.residual = res.residual;
  return sol;
}

OracleResult eg_oracle(const MarketInstance& inst, double grid_step) {
  if (inst.horizon() > 4) {
    throw InvalidInstance("eg_oracle supports horizon <= 4");
  }
  int cells = 0;
  for (int allowed : {100, 50, 20}) {
    if (std::abs(grid_step * allowed - 1.0) < 1e-9) cells = allowed;
  }
  if (cells == 0) {
    throw InvalidInstance("eg_oracle grid_step must be 0.01, 0.02 or 0.05");
  }
  const std::size_t h = inst.horizon();
  std::vector<int> level(h, 0);
  std::vector<double> x(h, 0.0);
  OracleResult best;
  best.objective = -kInf;
  best.x.assign(h, 0.0);
  for (;;) {
    bool feasible = true;
    for (std::size_t j = 0; j < inst.m() && feasible; ++j) {
      int load = 0;
      for (std::size_t k : inst.events_of_user(j)) load += level[k];
      feasible = load <= inst.supply(j) * cells;
    }
    if (feasible) {
      for (std::size_t k = 0; k < h; ++k) x[k] = static_cast<double>(level[k]) / cells;
      const double f = eg_objective(inst, x);
      if (f > best.objective) {
        best.objective = f;
        best.x = x;
      }
    }
    std::size_t pos = 0;
    while (pos < h && level[pos] == cells) level[pos++] = 0;
    if (pos == h) break;
    ++level[pos];
  }
  return best;
}

EgSolution recover_duals(const MarketInstance& inst, const Allocation& x,
                         double eps) {
  EgSolution sol;
  sol.x = x;
  sol.utils = utilities(inst, x);
  sol.betas.resize(inst.n());
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (sol.utils.u[i] <= 0.0) {
      throw Infeasible("type " + std::to_string(i + 1) +
                       " has zero utility; its pacing multiplier is undefined");
    }
    sol.betas[i] = inst.budget(i) / sol.utils.u[i];
  }
  if (inst.platform_budget() > 0.0) {
    if (sol.utils.u_p <= 0.0) {
      throw Infeasible("platform has zero utility; its multiplier is undefined");
    }
    sol.beta_p = inst.platform_budget() / sol.utils.u_p;
  }

  sol.user_prices.assign(inst.m(), 0.0);
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const auto idx = inst.events_of_user(j);
    double load = 0.0;
    for (std::size_t k : idx) load += x[k];
    if (load < static_cast<double>(inst.supply(j)) - eps) continue;
    double interior = -kInf, losing = -kInf, winning = kInf;
    for (std::size_t k : idx) {
      const double b = bid_of(inst.event(k), sol.betas, sol.beta_p);
      if (x[k] <= eps) {
        losing = std::max(losing, b);
      } else if (x[k] >= 1.0 - eps) {
        winning = std::min(winning, b);
      } else {
        interior = std::max(interior, b);
      }
    }
    double p = interior;
    if (p == -kInf) p = losing;
    if (p == -kInf) p = winning;
    sol.user_prices[j] = std::max(0.0, p);
  }

  sol.event_lambdas.assign(inst.horizon(), 0.0);
  sol.event_prices.assign(inst.horizon(), 0.0);
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    const Event& e = inst.event(k);
    const double p = sol.user_prices[e.user];
    if (x[k] >= 1.0 - eps) {
      sol.event_lambdas[k] = std::max(0.0, bid_of(e, sol.betas, sol.beta_p) - p);
    }
    sol.event_prices[k] = p + sol.event_lambdas[k];
  }
  sol.objective = eg_objective(inst, x);
  return sol;
}

double dual_objective(const MarketInstance& inst,
                      std::span<const double> user_prices,
                      std::span<const double> betas, double beta_p) {
  if (user_prices.size() != inst.m() || betas.size() != inst.n()) {
    throw InvalidInstance("dual_objective: price or multiplier vector has the wrong size");
  }
  double f = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (betas[i] <= 0.0) return kInf;
    f -= inst.budget(i) * std::log(betas[i]);
  }
  if (inst.platform_budget() > 0.0) {
    if (beta_p <= 0.0) return kInf;
    f -= inst.platform_budget() * std::log(beta_p);
  }
  for (std::size_t j = 0; j < inst.m(); ++j) {
    f += static_cast<double>(inst.supply(j)) * user_prices[j];
  }
  for (const Event& e : inst.events()) {
    f += std::max(0.0, bid_of(e, betas, beta_p) - user_prices[e.user]);
  }
  return f;
}

double duality_constant(const MarketInstance& inst) {
  double c = 0.0;
  for (double b : inst.budgets()) c += b * std::log(b) - b;
  const double bp = inst.platform_budget();
  if (bp > 0.0) c += bp * std::log(bp) - bp;
  return c;
}

CheckReport verify_nfppe(const EgSolution& sol, const MarketInstance& inst,
                         double tol, double proportionality_slack) {
  CheckReport report;
  const std::size_t h = inst.horizon();
  if (sol.x.size() != h || sol.event_prices.size() != h ||
      sol.event_lambdas.size() != h || sol.user_prices.size() != inst.m() ||
      sol.betas.size() != inst.n()) {
    report.checks.push_back({"shape", false, kInf, "solution does not match the instance"});
    return report;
  }
  const auto u = utilities(inst, sol.x);

  {
    Check c{"budget_clearing", true, 0.0, ""};
    for (std::size_t i = 0; i < inst.n(); ++i) {
      const double spent = sol.betas[i] * u.u[i];
      c.residual = std::max(c.residual, std::abs(spent - inst.budget(i)) / inst.budget(i));
    }
    const double spent_p = sol.beta_p * u.u_p;
    if (inst.platform_budget() > 0.0) {
      c.residual = std::max(c.residual, std::abs(spent_p - inst.platform_budget()) /
                                            inst.platform_budget());
    } else {
      c.residual = std::max(c.residual, std::abs(spent_p));
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }

  double scale = 0.0;
  std::vector<double> bids(h);
  for (std::size_t k = 0; k < h; ++k) {
    bids[k] = bid_of(inst.event(k), sol.betas, sol.beta_p);
    scale = std::max({scale, bids[k], sol.event_prices[k]});
  }
  scale = std::max(scale, 1e-300);

  {
    // x = 0: bid <= p^t = p_j;  0 < x < 1: bid = p^t = p_j;  x = 1: bid = p^t >= p_j
    Check c{"foc_consistency", true, 0.0, ""};
    for (std::size_t k = 0; k < h; ++k) {
      const double p = sol.user_prices[inst.event(k).user];
      const double pt = sol.event_prices[k];
      double viol = 0.0;
      if (sol.x[k] <= tol) {
        viol = std::max({bids[k] - pt, std::abs(pt - p)});
      } else if (sol.x[k] >= 1.0 - tol) {
        viol = std::max(std::abs(bids[k] - pt), p - pt);
      } else {
        viol = std::max(std::abs(bids[k] - p), std::abs(pt - p));
      }
      if (viol / scale > c.residual) {
        c.residual = viol / scale;
        c.detail = "worst at t=" + std::to_string(inst.event(k).t);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }

  {
    Check c{"supply", true, 0.0, ""};
    for (std::size_t j = 0; j < inst.m(); ++j) {
      const auto idx = inst.events_of_user(j);
      double load = 0.0;
      for (std::size_t k : idx) load += sol.x[k];
      const double target = std::min(static_cast<double>(inst.supply(j)),
                                     static_cast<double>(idx.size()));
      if (std::abs(load - target) > c.residual) {
        c.residual = std::abs(load - target);
        c.detail = "worst at user " + std::to_string(j + 1);
      }
    }
    for (double xv : sol.x) {
      c.residual = std::max({c.residual, -xv, xv - 1.0});
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }

  {
    // Purchased opportunities have the lowest subsidized price per unit of
    // value, for every type and for the platform.
    Check c{"bang_per_buck", true, 0.0, ""};
    for (std::size_t i = 0; i < inst.n(); ++i) {
      double worst_bought = -kInf, best_any = kInf;
      for (std::size_t k : inst.events_of_type(i)) {
        const Event& e = inst.event(k);
        if (e.v <= 0.0) continue;
        const double r = (sol.event_prices[k] - sol.beta_p * e.v_p) / e.v;
        best_any = std::min(best_any, r);
        if (sol.x[k] > tol) worst_bought = std::max(worst_bought, r);
      }
      if (worst_bought > -kInf) {
        const double ref = std::max(sol.betas[i], 1e-300);
        c.residual = std::max(c.residual, (worst_bought - best_any) / ref);
      }
    }
    if (inst.platform_budget() > 0.0) {
      double worst_bought = -kInf, best_any = kInf;
      for (std::size_t k = 0; k < h; ++k) {
        const Event& e = inst.event(k);
        if (e.v_p <= 0.0) continue;
        const double r = (sol.event_prices[k] - sol.betas[e.type] * e.v) / e.v_p;
        best_any = std::min(best_any, r);
        if (sol.x[k] > tol) worst_bought = std::max(worst_bought, r);
      }
      if (worst_bought > -kInf) {
        c.residual = std::max(c.residual, (worst_bought - best_any) /
                                              std::max(sol.beta_p, 1e-300));
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }

  {
    Check c{"proportionality", true, 0.0, ""};
    const auto bench = proportional_benchmarks(pad_for_benchmarks(inst));
    c.residual = -kInf;
    for (std::size_t i = 0; i < inst.n(); ++i) {
      c.residual = std::max(c.residual, bench.u[i] - u.u[i]);
    }
    if (inst.platform_budget() > 0.0) {
      c.residual = std::max(c.residual, bench.u_p - u.u_p);
    }
    c.passed = c.residual <= proportionality_slack;
    c.residual = std::max(c.residual, 0.0);
    report.checks.push_back(c);
  }
  return report;
}

nlohmann::json to_json(const EgSolution& sol) {
  nlohmann::json doc;
  doc["x"] = sol.x;
  doc["user_prices"] = sol.user_prices;
  doc["event_lambdas"] = sol.event_lambdas;
  doc["event_prices"] = sol.event_prices;
  doc["betas"] = sol.betas;
  doc["beta_p"] = sol.beta_p;
  doc["utilities"] = {{"u", sol.utils.u}, {"u_p", sol.utils.u_p}};
  doc["objective"] = sol.objective;
  doc["iterations"] = sol.iterations;
  doc["residual"] = sol.residual;
  return doc;
}

nlohmann::json to_json(const CheckReport& report) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : report.checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"residual", c.residual},
                   {"detail", c.detail}});
  }
  return arr;
}

EgSolution eg_solution_from_json(const nlohmann::json& doc) {
  EgSolution sol;
  doc.at("x").get_to(sol.x);
  doc.at("user_prices").get_to(sol.user_prices);
  doc.at("event_lambdas").get_to(sol.event_lambdas);
  doc.at("event_prices").get_to(sol.event_prices);
  doc.at("betas").get_to(sol.betas);
  sol.beta_p = doc.at("beta_p").get<double>();
  doc.at("utilities").at("u").get_to(sol.utils.u);
  sol.utils.u_p = doc.at("utilities").at("u_p").get<double>();
  sol.objective = doc.value("objective", 0.0);
  sol.iterations = doc.value("iterations", std::size_t{0});
  sol.residual = doc.value("residual", 0.0);
  return sol;
}

}  // namespace notif
