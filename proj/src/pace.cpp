#include "notif/pace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "notif/error.hpp"
#include "notif/pga.hpp"

namespace notif {

namespace {

double clamp_beta(const PaceState& s, double budget, double cum, double floor) {
  if (budget <= 0.0) return 0.0;
  const double t = static_cast<double>(s.t);
  if (s.clamp_mode == ClampMode::proportional) {
    const double cap = budget / floor;
    return cum > 0.0 ? std::min(budget * t / cum, cap) : cap;
  }
  const double lo = budget / (1.0 + s.delta0);
  const double hi = 1.0 + s.delta0;
  const double raw = cum > 0.0 ? budget * t / cum : hi;
  return std::clamp(raw, lo, std::max(lo, hi));
}

}  // namespace

PaceState make_pace_state(std::span<const double> budgets, double platform_budget,
                          std::span<const double> floors, double floor_p,
                          ClampMode mode, double delta0) {
  if (floors.size() != budgets.size()) {
    throw InvalidInstance("pace state: one floor per type is required");
  }
  if (mode == ClampMode::delta0 && !(delta0 > 0.0)) {
    throw InvalidInstance("pace state: delta0 must be positive");
  }
  PaceState s;
  s.budgets.assign(budgets.begin(), budgets.end());
  s.platform_budget = platform_budget;
  s.floors.assign(floors.begin(), floors.end());
  s.floor_p = floor_p;
  s.clamp_mode = mode;
  s.delta0 = delta0;
  s.cum_utils.assign(budgets.size(), 0.0);
  if (mode == ClampMode::proportional) {
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      if (budgets[i] > 0.0 && !(floors[i] > 0.0)) {
        throw InvalidInstance("pace state: type " + std::to_string(i + 1) +
                              " has a budget but no proportional utility");
      }
    }
    if (platform_budget > 0.0 && !(floor_p > 0.0)) {
      throw InvalidInstance("pace state: platform has a budget but no proportional utility");
    }
  }
  s.betas.resize(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    s.betas[i] = clamp_beta(s, budgets[i], 0.0, floors[i]);
  }
  s.beta_p = clamp_beta(s, platform_budget, 0.0, floor_p);
  return s;
}

void pace_warm_start(PaceState& state, std::int64_t t0, std::span<const double> betas,
                     double beta_p) {
  if (t0 <= 0) throw InvalidInstance("warm start needs a positive pseudo-count");
  if (betas.size() != state.betas.size()) throw InvalidInstance("one multiplier per type");
  state.t = t0;
  const double t = static_cast<double>(t0);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    state.cum_utils[i] = betas[i] > 0.0 ? t * state.budgets[i] / betas[i] : 0.0;
    state.betas[i] = clamp_beta(state, state.budgets[i], state.cum_utils[i], state.floors[i]);
  }
  state.cum_util_p = beta_p > 0.0 ? t * state.platform_budget / beta_p : 0.0;
  state.beta_p = clamp_beta(state, state.platform_budget, state.cum_util_p, state.floor_p);
}

std::pair<std::vector<double>, double> pace_floors(const MarketInstance& window) {
  const auto bench = proportional_benchmarks(pad_for_benchmarks(window));
  const double h = static_cast<double>(window.horizon());
  std::vector<double> floors = bench.u;
  for (double& f : floors) f /= h;
  return {floors, bench.u_p / h};
}

Decision fp_decide(const PaceState& state, const PriceBook& prices, const Event& e) {
  if (e.type >= state.betas.size()) throw InvalidInstance("fp_decide: unknown type");
  if (e.user >= prices.size()) throw InvalidInstance("fp_decide: unknown user");
  Decision d;
  const double type_part = state.betas[e.type] * e.v;
  const double platform_part = state.beta_p * e.v_p;
  d.bid = type_part + platform_part;
  d.send = d.bid >= prices.prices[e.user];
  if (d.send) {
    d.type_charge = type_part;
    d.platform_charge = platform_part;
  }
  return d;
}

void pace_update(PaceState& state, std::size_t type, double u, double u_p) {
  if (type >= state.cum_utils.size()) throw InvalidInstance("pace_update: unknown type");
  state.cum_utils[type] += u;
  state.cum_util_p += u_p;
  ++state.t;
  for (std::size_t i = 0; i < state.betas.size(); ++i) {
    state.betas[i] = clamp_beta(state, state.budgets[i], state.cum_utils[i], state.floors[i]);
  }
  state.beta_p = clamp_beta(state, state.platform_budget, state.cum_util_p, state.floor_p);
}

PaceRun run_pace(PaceState state, std::span<const Event> events,
                 const PriceBook& prices, std::optional<std::vector<double>> beta_star) {
  const std::size_t n = state.betas.size();
  if (beta_star && beta_star->size() != n + 1) {
    throw InvalidInstance("run_pace: beta* needs n + 1 entries");
  }
  PaceRun run;
  run.betas.reserve(events.size());
  run.sent.reserve(events.size());
  for (const Event& e : events) {
    const Decision d = fp_decide(state, prices, e);
    run.sent.push_back(d.send ? 1 : 0);
    run.bids.push_back(d.bid);
    run.type_charges.push_back(d.type_charge);
    run.platform_charges.push_back(d.platform_charge);
    pace_update(state, e.type, d.send ? e.v : 0.0, d.send ? e.v_p : 0.0);
    std::vector<double> row = state.betas;
    row.push_back(state.beta_p);
    if (beta_star) {
      double dist = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = row[i] - (*beta_star)[i];
        dist += diff * diff;
      }
      if (state.platform_budget > 0.0) {
        const double diff = state.beta_p - (*beta_star)[n];
        dist += diff * diff;
      }
      run.sq_dist.push_back(dist);
    }
    run.betas.push_back(std::move(row));
  }
  run.final_state = std::move(state);
  return run;
}

BetaStar underlying_beta_star(std::span<const Event> samples,
                              std::span<const double> user_prices,
                              std::span<const double> budgets, double platform_budget,
                              double tol) {
  if (samples.empty()) throw InvalidInstance("underlying_beta_star: no samples");
  const double count = static_cast<double>(samples.size());
  // Multiplying the sample-average objective by N leaves the argmax alone
  // and gives order-one gradients beta v - p.
  LogUtilityProblem prob;
  for (double b : budgets) prob.budgets.push_back(b * count);
  prob.platform_budget = platform_budget * count;
  std::vector<bool> valued(budgets.size(), false);
  bool platform_valued = false;
  for (const Event& e : samples) {
    if (e.type >= budgets.size()) throw InvalidInstance("sample type out of range");
    if (e.user >= user_prices.size()) throw InvalidInstance("sample user out of range");
    if (e.v < 0.0 || e.v > 1.0 || e.v_p < 0.0 || e.v_p > 1.0) {
      throw InvalidInstance("sample values must lie in [0, 1]");
    }
    prob.owner.push_back(e.type);
    prob.value.push_back(e.v);
    prob.platform_value.push_back(e.v_p);
    prob.cost.push_back(user_prices[e.user]);
    valued[e.type] = valued[e.type] || e.v > 0.0;
    platform_valued = platform_valued || e.v_p > 0.0;
  }
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] > 0.0 && !valued[i]) {
      throw Infeasible("type " + std::to_string(i + 1) + " has no valued sample");
    }
  }
  if (platform_budget > 0.0 && !platform_valued) {
    throw Infeasible("platform has no valued sample");
  }
  PgaOptions opts;
  opts.tol = tol;
  PgaResult res = maximize_log_utility(prob, std::vector<double>(samples.size(), 1.0), opts);
  if (!res.converged) {
    throw NonConvergence("underlying_beta_star did not converge", res.residual);
  }
  BetaStar out;
  out.iterations = res.iterations;
  out.residual = res.residual;
  out.avg_utils.assign(budgets.size(), 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out.avg_utils[samples[k].type] += samples[k].v * res.x[k];
    out.avg_util_p += samples[k].v_p * res.x[k];
  }
  for (double& u : out.avg_utils) u /= count;
  out.avg_util_p /= count;
  out.betas.resize(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    out.betas[i] = budgets[i] > 0.0 ? budgets[i] / out.avg_utils[i] : 0.0;
  }
  out.beta_p = platform_budget > 0.0 ? platform_budget / out.avg_util_p : 0.0;
  return out;
}

BetaStar underlying_beta_star(const std::function<Event(std::uint64_t)>& sampler,
                              std::span<const double> user_prices,
                              std::span<const double> budgets, double platform_budget,
                              std::size_t samples, double tol) {
  std::vector<Event> draws;
  draws.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) draws.push_back(sampler(k));
  return underlying_beta_star(draws, user_prices, budgets, platform_budget, tol);
}

GradientBounds gradient_bounds(std::span<const Event> samples, std::size_t n) {
  GradientBounds g;
  if (samples.empty()) return g;
  std::vector<double> sqrt_sum(n, 0.0), second(n, 0.0);
  double second_p = 0.0, vp_only = 0.0;
  for (const Event& e : samples) {
    const double r = std::sqrt(e.v) + std::sqrt(e.v_p);
    sqrt_sum[e.type] += r * r - e.v_p;
    vp_only += e.v_p;
    second[e.type] += e.v * e.v;
    second_p += e.v_p * e.v_p;
  }
  // For type i, events of other types contribute (0 + sqrt v_p)^2 = v_p.
  const double count = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    g.g2_sqrt_sum = std::max(g.g2_sqrt_sum, (sqrt_sum[i] + vp_only) / count);
    g.g2_second_moment = std::max(g.g2_second_moment, second[i] / count);
  }
  g.g2_second_moment = std::max(g.g2_second_moment, second_p / count);
  return g;
}

double pace_envelope(double t, double g2, double denom) {
  return (6.0 + std::log(t)) * g2 / (t * denom * denom);
}

}  // namespace notif
