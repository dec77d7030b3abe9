#include "notif/sp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "notif/error.hpp"

namespace notif {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clip_ratio(double expected, double actual, double gamma, double eps) {
  if (expected == 0.0 && actual == 0.0) return 1.0;
  return std::clamp(expected / std::max(actual, eps), 1.0 - gamma, 1.0 + gamma);
}

}  // namespace

void TopBids::insert(double bid) {
  ++seen_;
  if (values_.size() == capacity_ && !(bid > values_.back())) return;
  auto pos = std::upper_bound(values_.begin(), values_.end(), bid, std::greater<>());
  values_.insert(pos, bid);
  if (values_.size() > capacity_) values_.pop_back();
}

SpState make_sp_state(std::span<const double> budgets, double platform_budget,
                      std::span<const double> betas, double beta_p,
                      std::span<const std::int64_t> supplies, std::int64_t horizon) {
  if (betas.size() != budgets.size()) throw InvalidInstance("one multiplier per type");
  if (horizon <= 0) throw InvalidInstance("horizon must be positive");
  SpState s;
  s.budgets.assign(budgets.begin(), budgets.end());
  s.platform_budget = platform_budget;
  s.betas.assign(betas.begin(), betas.end());
  s.beta_p = platform_budget > 0.0 ? beta_p : 0.0;
  s.spend.assign(budgets.size(), 0.0);
  s.horizon = horizon;
  s.supplies.assign(supplies.begin(), supplies.end());
  for (std::int64_t sj : supplies) {
    if (sj < 1) throw InvalidInstance("supplies must be positive");
    s.top_bids.emplace_back(static_cast<std::size_t>(sj) + 1);
  }
  s.recent.resize(supplies.size());
  return s;
}

void sp_expire(SpState& state, std::size_t user, std::int64_t step) {
  if (state.window <= 0) return;
  auto& q = state.recent.at(user);
  bool dropped = false;
  while (!q.empty() && q.front().first <= step - state.window) {
    q.pop_front();
    dropped = true;
  }
  if (!dropped) return;
  TopBids& top = state.top_bids[user];
  top.clear();
  for (const auto& [when, bid] : q) top.insert(bid);
}

void sp_observe(SpState& state, std::size_t user, std::int64_t step, double bid) {
  if (state.window > 0) {
    state.recent.at(user).emplace_back(step, bid);
    sp_expire(state, user, step);
  }
  state.top_bids.at(user).insert(bid);
}

double sp_price(const SpState& state, std::size_t user) {
  const TopBids& top = state.top_bids.at(user);
  const auto s = static_cast<std::size_t>(state.supplies[user]);
  if (top.seen() <= s) return 0.0;
  return top.values()[s];
}

Decision sp_decide(const SpState& state, const Event& e, double price) {
  if (e.type >= state.betas.size()) throw InvalidInstance("sp_decide: unknown type");
  Decision d;
  const double beta_p = state.spend_p >= state.platform_budget ? 0.0 : state.beta_p;
  const double subsidy = beta_p * e.v_p;
  d.bid = state.betas[e.type] * e.v + subsidy;
  d.send = d.bid >= price && state.spend[e.type] < state.budgets[e.type];
  if (d.send) {
    d.type_charge = std::max(0.0, price - subsidy);
    d.platform_charge = subsidy;
  }
  return d;
}

void sp_record(SpState& state, const Event& e, const Decision& d) {
  if (d.send) {
    state.spend[e.type] += d.type_charge;
    state.spend_p += d.platform_charge;
  }
  ++state.elapsed;
}

void budget_pacing_update(SpState& state) {
  const double frac =
      static_cast<double>(state.elapsed) / static_cast<double>(state.horizon);
  for (std::size_t i = 0; i < state.betas.size(); ++i) {
    state.betas[i] *= clip_ratio(state.budgets[i] * frac, state.spend[i], state.gamma,
                                 state.eps);
  }
  if (state.platform_budget > 0.0) {
    state.beta_p *= clip_ratio(state.platform_budget * frac, state.spend_p, state.gamma,
                               state.eps);
  }
}

ForcedOutcome forced_outcome(const MarketInstance& inst, std::span<const double> betas,
                             double beta_p) {
  ForcedOutcome out;
  out.bids.resize(inst.horizon());
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    const Event& e = inst.event(k);
    out.bids[k] = betas[e.type] * e.v + beta_p * e.v_p;
  }
  out.user_prices.assign(inst.m(), 0.0);
  out.x.assign(inst.horizon(), 0.0);
  std::vector<double> tmp;
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const auto idx = inst.events_of_user(j);
    const auto s = static_cast<std::size_t>(inst.supply(j));
    double p = 0.0;
    if (idx.size() > s) {
      tmp.clear();
      for (std::size_t k : idx) tmp.push_back(out.bids[k]);
      std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(s), tmp.end(),
                       std::greater<>());
      p = tmp[s];
    }
    out.user_prices[j] = p;
    std::size_t room = s;
    for (std::size_t k : idx) {
      if (out.bids[k] > p) {
        out.x[k] = 1.0;
        --room;
      }
    }
    for (std::size_t k : idx) {
      if (room == 0) break;
      if (out.bids[k] == p) {
        out.x[k] = 1.0;
        --room;
      }
    }
  }
  return out;
}

CheckReport verify_nsppe(const MarketInstance& inst, std::span<const double> betas,
                         double beta_p, std::span<const double> user_prices,
                         const Allocation& x, double tol) {
  CheckReport report;
  if (betas.size() != inst.n() || user_prices.size() != inst.m() ||
      x.size() != inst.horizon()) {
    report.checks.push_back({"shape", false, kInf, "inputs do not match the instance"});
    return report;
  }
  const ForcedOutcome forced = forced_outcome(inst, betas, beta_p);
  double scale = 1e-300;
  for (double b : forced.bids) scale = std::max(scale, b);
  for (double p : user_prices) scale = std::max(scale, p);

  {
    Check c{"price_setting", true, 0.0, ""};
    for (std::size_t j = 0; j < inst.m(); ++j) {
      const double r = std::abs(user_prices[j] - forced.user_prices[j]) / scale;
      if (r > c.residual) {
        c.residual = r;
        c.detail = "worst at user " + std::to_string(j + 1);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  {
    Check c{"winning_bids", true, 0.0, ""};
    for (std::size_t k = 0; k < inst.horizon(); ++k) {
      const double gap = (forced.bids[k] - user_prices[inst.event(k).user]) / scale;
      double r = 0.0;
      if (x[k] != 0.0 && x[k] != 1.0) {
        r = 1.0;
      } else if (gap > tol && x[k] == 0.0) {
        r = gap;
      } else if (gap < -tol && x[k] == 1.0) {
        r = -gap;
      }
      if (r > c.residual) {
        c.residual = r;
        c.detail = "worst at t=" + std::to_string(inst.event(k).t);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  {
    Check c{"supply", true, 0.0, ""};
    for (std::size_t j = 0; j < inst.m(); ++j) {
      double load = 0.0;
      for (std::size_t k : inst.events_of_user(j)) load += x[k];
      const double s = static_cast<double>(inst.supply(j));
      double r = std::max(0.0, load - s);
      if (user_prices[j] > tol * scale) r = std::max(r, s - load);
      if (r > c.residual) {
        c.residual = r;
        c.detail = "worst at user " + std::to_string(j + 1);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }

  std::vector<double> spend(inst.n(), 0.0), value(inst.n(), 0.0);
  double spend_p = 0.0;
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    const Event& e = inst.event(k);
    const double subsidy = beta_p * e.v_p;
    spend[e.type] += x[k] * std::max(0.0, user_prices[e.user] - subsidy);
    spend_p += x[k] * subsidy;
    value[e.type] += x[k] * e.v;
  }
  {
    Check c{"type_budgets", true, 0.0, ""};
    for (std::size_t i = 0; i < inst.n(); ++i) {
      const double r = std::abs(spend[i] - inst.budget(i)) / inst.budget(i);
      if (r > c.residual) {
        c.residual = r;
        c.detail = "worst at type " + std::to_string(i + 1);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  {
    Check c{"platform_budget", true, 0.0, ""};
    const double bp = inst.platform_budget();
    c.residual = bp > 0.0 ? std::abs(spend_p - bp) / bp : std::abs(spend_p);
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  {
    // Net price per unit of value: everything bought is at least as cheap as
    // everything left over.
    Check c{"demand", true, 0.0, ""};
    for (std::size_t i = 0; i < inst.n(); ++i) {
      double worst_bought = -kInf, best_left = kInf;
      for (std::size_t k : inst.events_of_type(i)) {
        const Event& e = inst.event(k);
        if (e.v <= 0.0) continue;
        const double q = std::max(0.0, user_prices[e.user] - beta_p * e.v_p) / e.v;
        if (x[k] > 0.5) {
          worst_bought = std::max(worst_bought, q);
        } else {
          best_left = std::min(best_left, q);
        }
      }
      if (worst_bought > -kInf && best_left < kInf) {
        const double ref = std::max(betas[i], 1e-300);
        const double r = std::max(0.0, worst_bought - best_left) / ref;
        if (r > c.residual) {
          c.residual = r;
          c.detail = "worst at type " + std::to_string(i + 1);
        }
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  {
    Check c{"proportional_share", true, 0.0, ""};
    const auto share = sp_proportional_share(pad_for_benchmarks(inst));
    for (std::size_t i = 0; i < inst.n(); ++i) {
      const double r = std::max(0.0, share[i] - value[i]) / std::max(share[i], 1e-300);
      if (r > c.residual) {
        c.residual = r;
        c.detail = "worst at type " + std::to_string(i + 1);
      }
    }
    c.passed = c.residual <= tol;
    report.checks.push_back(c);
  }
  return report;
}

namespace {

struct Scored {
  std::vector<double> betas;
  double beta_p = 0.0;
  double residual = kInf;
};

double budget_residual(const MarketInstance& inst, const ForcedOutcome& f,
                       double beta_p) {
  std::vector<double> spend(inst.n(), 0.0);
  double spend_p = 0.0;
  for (std::size_t k = 0; k < inst.horizon(); ++k) {
    if (f.x[k] == 0.0) continue;
    const Event& e = inst.event(k);
    const double subsidy = beta_p * e.v_p;
    spend[e.type] += std::max(0.0, f.user_prices[e.user] - subsidy);
    spend_p += subsidy;
  }
  double r = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    r = std::max(r, std::abs(spend[i] - inst.budget(i)) / inst.budget(i));
  }
  const double bp = inst.platform_budget();
  r = std::max(r, bp > 0.0 ? std::abs(spend_p - bp) / bp : spend_p);
  return r;
}

// Visits every point of the product grid lo[d] + k step, k = 0..count[d]-1,
// keeping the first point with the smallest residual.
void scan(const MarketInstance& inst, const std::vector<double>& lo,
          const std::vector<std::size_t>& count, double step, bool platform,
          Scored& best) {
  const std::size_t dims = lo.size();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> betas(inst.n());
  for (;;) {
    for (std::size_t i = 0; i < inst.n(); ++i) {
      betas[i] = lo[i] + static_cast<double>(idx[i]) * step;
    }
    const double bp =
        platform ? lo[dims - 1] + static_cast<double>(idx[dims - 1]) * step : 0.0;
    const ForcedOutcome f = forced_outcome(inst, betas, bp);
    const double r = budget_residual(inst, f, bp);
    if (r < best.residual) {
      best.residual = r;
      best.betas = betas;
      best.beta_p = bp;
    }
    std::size_t d = 0;
    while (d < dims && idx[d] + 1 == count[d]) idx[d++] = 0;
    if (d == dims) break;
    ++idx[d];
  }
}

}  // namespace

NsppeCandidate nsppe_search(const MarketInstance& inst, double grid_step, double tol,
                            int refine_rounds) {
  if (inst.n() > 3) throw InvalidInstance("nsppe_search supports at most 3 types");
  if (inst.horizon() > 30) throw InvalidInstance("nsppe_search supports horizon <= 30");
  if (!(grid_step > 0.0)) throw InvalidInstance("grid step must be positive");

  const auto bench = proportional_benchmarks(pad_for_benchmarks(inst));
  double beta_max = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    beta_max = std::max(beta_max, 2.0 * inst.budget(i) / bench.u[i]);
  }
  const bool platform = inst.platform_budget() > 0.0;
  double beta_p_max = 0.0;
  if (platform) {
    if (!(bench.u_p > 0.0)) throw Infeasible("platform has no proportional utility");
    beta_p_max = 2.0 * inst.platform_budget() / bench.u_p;
  }
  const std::size_t dims = inst.n() + (platform ? 1 : 0);

  std::vector<double> lo(dims, 0.0);
  std::vector<std::size_t> count(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const double top = (platform && d == dims - 1) ? beta_p_max : beta_max;
    count[d] = static_cast<std::size_t>(std::floor(top / grid_step + 1e-9)) + 1;
  }
  Scored best;
  scan(inst, lo, count, grid_step, platform, best);

  double step = grid_step;
  for (int round = 0; round < refine_rounds; ++round) {
    const double fine = step / 10.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double centre = (platform && d == dims - 1) ? best.beta_p : best.betas[d];
      lo[d] = std::max(0.0, centre - step);
      count[d] = static_cast<std::size_t>(std::floor((centre + step - lo[d]) / fine + 1e-9)) + 1;
    }
    scan(inst, lo, count, fine, platform, best);
    step = fine;
  }

  NsppeCandidate out;
  const ForcedOutcome f = forced_outcome(inst, best.betas, best.beta_p);
  out.betas = best.betas;
  out.beta_p = best.beta_p;
  out.user_prices = f.user_prices;
  out.x = f.x;
  out.residual = best.residual;
  out.report = verify_nsppe(inst, out.betas, out.beta_p, out.user_prices, out.x, tol);
  out.verified = out.report.all_passed();
  return out;
}

}  // namespace notif
