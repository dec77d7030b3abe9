#include "notif/pga.hpp"

#include <algorithm>
#include <cmath>

#include "notif/error.hpp"

namespace notif {

double LogUtilityProblem::total_budget() const {
  double total = platform_budget;
  for (double b : budgets) total += b;
  return total;
}

void project_capped_box(std::span<double> y, double cap) {
  double sum = 0.0;
  for (double v : y) sum += std::clamp(v, 0.0, 1.0);
  if (sum <= cap) {
    for (double& v : y) v = std::clamp(v, 0.0, 1.0);
    return;
  }
  // phi(tau) = sum clamp(y - tau, 0, 1) is continuous, non-increasing and
  // piecewise linear with breakpoints at y_k - 1 and y_k.
  auto phi = [&](double tau) {
    double s = 0.0;
    for (double v : y) s += std::clamp(v - tau, 0.0, 1.0);
    return s;
  };
  std::vector<double> bp;
  bp.reserve(2 * y.size() + 1);
  bp.push_back(0.0);
  for (double v : y) {
    if (v - 1.0 > 0.0) bp.push_back(v - 1.0);
    if (v > 0.0) bp.push_back(v);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  // phi(bp.front()) = phi(0) > cap and phi(bp.back()) = 0 < cap.
  std::size_t lo = 0, hi = bp.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (phi(bp[mid]) >= cap) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double f_lo = phi(bp[lo]);
  const double f_hi = phi(bp[hi]);
  double tau = bp[lo];
  if (f_lo > f_hi) tau += (f_lo - cap) / (f_lo - f_hi) * (bp[hi] - bp[lo]);
  for (double& v : y) v = std::clamp(v - tau, 0.0, 1.0);
}

namespace {

class Solver {
 public:
  Solver(const LogUtilityProblem& prob, const PgaOptions& opts)
      : p_(prob), opts_(opts), n_(prob.budgets.size()) {
    const std::size_t k = prob.size();
    if (prob.value.size() != k || prob.platform_value.size() != k ||
        (!prob.cost.empty() && prob.cost.size() != k) ||
        (!prob.group.empty() && prob.group.size() != k)) {
      throw InvalidInstance("log-utility problem arrays have mismatched sizes");
    }
    members_.assign(prob.group_cap.size(), {});
    for (std::size_t c = 0; c < prob.group.size(); ++c) {
      const std::size_t g = prob.group[c];
      if (g == LogUtilityProblem::kNoGroup) continue;
      if (g >= members_.size()) throw InvalidInstance("group index out of range");
      members_[g].push_back(c);
    }
    use_platform_ = prob.platform_budget > 0.0;
  }

  void utilities(std::span<const double> x, std::vector<double>& u,
                 double& u_p) const {
    u.assign(n_, 0.0);
    u_p = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      u[p_.owner[c]] += p_.value[c] * x[c];
      u_p += p_.platform_value[c] * x[c];
    }
  }

  double objective(std::span<const double> x) const {
    std::vector<double> u;
    double u_p;
    utilities(x, u, u_p);
    return objective_from(x, u, u_p);
  }

  double objective_from(std::span<const double> x, const std::vector<double>& u,
                        double u_p) const {
    double f = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (u[i] <= 0.0) return -std::numeric_limits<double>::infinity();
      f += p_.budgets[i] * std::log(u[i]);
    }
    if (use_platform_) {
      if (u_p <= 0.0) return -std::numeric_limits<double>::infinity();
      f += p_.platform_budget * std::log(u_p);
    }
    if (!p_.cost.empty()) {
      for (std::size_t c = 0; c < x.size(); ++c) f -= p_.cost[c] * x[c];
    }
    return f;
  }

  void gradient(const std::vector<double>& u, double u_p,
                std::vector<double>& g) const {
    std::vector<double> beta(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      beta[i] = p_.budgets[i] / std::max(u[i], opts_.utility_floor);
    }
    const double beta_p =
        use_platform_ ? p_.platform_budget / std::max(u_p, opts_.utility_floor)
                      : 0.0;
    g.resize(p_.size());
    for (std::size_t c = 0; c < g.size(); ++c) {
      g[c] = beta[p_.owner[c]] * p_.value[c] + beta_p * p_.platform_value[c];
      if (!p_.cost.empty()) g[c] -= p_.cost[c];
    }
  }

  void project(std::vector<double>& y) const {
    if (members_.empty()) {
      for (double& v : y) v = std::clamp(v, 0.0, 1.0);
      return;
    }
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (p_.group[c] == LogUtilityProblem::kNoGroup) y[c] = std::clamp(y[c], 0.0, 1.0);
    }
    std::vector<double> buf;
    for (std::size_t g = 0; g < members_.size(); ++g) {
      const auto& idx = members_[g];
      buf.resize(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) buf[r] = y[idx[r]];
      project_capped_box(buf, p_.group_cap[g]);
      for (std::size_t r = 0; r < idx.size(); ++r) y[idx[r]] = buf[r];
    }
  }

  // Normalizing by the largest gradient entry makes the residual invariant
  // to rescaling budgets, costs or values.
  double residual(std::span<const double> x, const std::vector<double>& g) const {
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += g[c] / scale;
    project(y);
    double r = 0.0;
    for (std::size_t c = 0; c < y.size(); ++c) r = std::max(r, std::abs(y[c] - x[c]));
    return r;
  }

  // f(x + d) - f(x), evaluated from utility increments for accuracy near the
  // optimum where both values agree to many digits.
  double increase(const std::vector<double>& u, double u_p,
                  std::span<const double> d) const {
    std::vector<double> du(n_, 0.0);
    double du_p = 0.0, dc = 0.0;
    for (std::size_t c = 0; c < d.size(); ++c) {
      du[p_.owner[c]] += p_.value[c] * d[c];
      du_p += p_.platform_value[c] * d[c];
      if (!p_.cost.empty()) dc += p_.cost[c] * d[c];
    }
    double inc = -dc;
    for (std::size_t i = 0; i < n_; ++i) {
      const double ratio = du[i] / u[i];
      if (ratio <= -1.0) return -std::numeric_limits<double>::infinity();
      inc += p_.budgets[i] * std::log1p(ratio);
    }
    if (use_platform_) {
      const double ratio = du_p / u_p;
      if (ratio <= -1.0) return -std::numeric_limits<double>::infinity();
      inc += p_.platform_budget * std::log1p(ratio);
    }
    return inc;
  }

  PgaResult run(std::vector<double> x) {
    PgaResult res;
    std::vector<double> u, g, trial, d(x.size());
    double u_p = 0.0;
    utilities(x, u, u_p);
    if (!std::isfinite(objective_from(x, u, u_p))) {
      throw InvalidInstance("starting point has a zero utility");
    }
    double step = 1.0;
    for (res.iterations = 0; res.iterations < opts_.max_iters; ++res.iterations) {
      gradient(u, u_p, g);
      res.residual = residual(x, g);
      if (res.residual <= opts_.tol) {
        res.converged = true;
        break;
      }
      // Backtracking on the projected arc; the trial step may grow by 2x per
      // iteration so badly scaled problems do not crawl.
      double alpha = std::min(2.0 * step, 1e12);
      bool accepted = false;
      while (alpha > 1e-30) {
        trial = x;
        for (std::size_t c = 0; c < trial.size(); ++c) trial[c] += alpha * g[c];
        project(trial);
        double lin = 0.0, sq = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
          d[c] = trial[c] - x[c];
          lin += g[c] * d[c];
          sq += d[c] * d[c];
        }
        const double inc = increase(u, u_p, d);
        if (inc >= lin - sq / (2.0 * alpha) - 1e-15 * std::abs(lin)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      step = alpha;
      x.swap(trial);
      utilities(x, u, u_p);
    }
    res.objective = objective_from(x, u, u_p);
    for (std::size_t i = 0; i < n_; ++i) {
      if (u[i] <= opts_.utility_floor) res.floor_active = true;
    }
    if (use_platform_ && u_p <= opts_.utility_floor) res.floor_active = true;
    res.x = std::move(x);
    return res;
  }

 private:
  const LogUtilityProblem& p_;
  PgaOptions opts_;
  std::size_t n_;
  bool use_platform_ = false;
  std::vector<std::vector<std::size_t>> members_;
};

}  // namespace

double log_utility_objective(const LogUtilityProblem& prob,
                             std::span<const double> x) {
  return Solver(prob, {}).objective(x);
}

PgaResult maximize_log_utility(const LogUtilityProblem& prob,
                               std::vector<double> x0, const PgaOptions& opts) {
  if (x0.size() != prob.size()) {
    throw InvalidInstance("starting point has the wrong dimension");
  }
  Solver solver(prob, opts);
  return solver.run(std::move(x0));
}

}  // namespace notif
