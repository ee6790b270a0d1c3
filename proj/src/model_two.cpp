#include "qts/model_two.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qts {

void M2Params::validate() const {
  if (!(lambda > 0 && theta2 > 0 && theta1 >= theta2))
    throw std::invalid_argument("model two needs lambda > 0 and theta1 >= theta2 > 0");
  if (!(delta > 0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 0.5)");
  if (lambda / (theta1 + theta2) > (1 - delta) / (1 + delta) + 1e-12)
    throw std::invalid_argument("arrival rate violates the stability margin");
  if (theta1 / theta2 > R + 1e-9) throw std::invalid_argument("rate ratio exceeds R");
  if (c_R < 1) throw std::invalid_argument("c_R must be at least 1");
}

Action m2_assign(double omega, const State& x) {
  return (1.0 + x[0] <= omega * (1.0 + x[1])) ? kQueue1 : kQueue2;
}

Policy m2_weighted_policy(double omega) {
  return [omega](const State& x) { return m2_assign(omega, x); };
}

std::vector<double> m2_departure_dist(double lambda, double theta, int n) {
  const double d = theta / (theta + lambda);
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  out[0] = std::pow(d, n);
  double w = 1.0 - d;  // lambda / (theta + lambda)
  for (int k = n; k >= 1; --k) {
    out[k] = w;
    w *= d;
  }
  return out;
}

double m2_departure_prob(double lambda, double theta, int n, int k) {
  if (k < 0 || k > n) return 0.0;
  const double d = theta / (theta + lambda);
  if (k == 0) return std::pow(d, n);
  return (1.0 - d) * std::pow(d, n - k);
}

TransitionDistribution m2_transition(const M2Params& p, const State& x, Action a) {
  State z = x;
  z[a == kQueue1 ? 0 : 1] += 1;
  const auto d1 = m2_departure_dist(p.lambda, p.theta1, z[0]);
  const auto d2 = m2_departure_dist(p.lambda, p.theta2, z[1]);
  TransitionDistribution out;
  out.entries.reserve(d1.size() * d2.size());
  for (int i = 0; i <= z[0]; ++i)
    for (int j = 0; j <= z[1]; ++j) out.entries.emplace_back(State{i, j}, d1[i] * d2[j]);
  return out;  // already lexicographic
}

TransitionDistribution M2Env::transition(const State& x, Action a) const {
  return m2_transition(p_, x, a);
}

double M2Env::probability(const State& x, Action a, const State& y) const {
  State z = x;
  z[a == kQueue1 ? 0 : 1] += 1;
  return m2_departure_prob(p_.lambda, p_.theta1, z[0], y[0]) *
         m2_departure_prob(p_.lambda, p_.theta2, z[1], y[1]);
}

CostEstimate m2_mc_cost(const M2Params& p, double omega, std::int64_t horizon, std::int64_t burn_in,
                        int reps, Rng& rng) {
  if (!(horizon > burn_in && burn_in >= 0 && reps >= 1))
    throw std::invalid_argument("m2_mc_cost needs horizon > burn_in >= 0 and reps >= 1");
  std::vector<std::uint64_t> seeds(reps);
  for (auto& s : seeds) s = rng.next();
  std::vector<double> means(reps);
  const M2Env env(p);
  const Policy pol = m2_weighted_policy(omega);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    Rng local(seeds[r]);
    State x = env.initial_state();
    double sum = 0.0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      if (t > burn_in) sum += l1_norm(x);
      x = env.step(x, pol(x), local);
    }
    means[r] = sum / static_cast<double>(horizon - burn_in);
  });
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / reps;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double se = reps > 1 ? std::sqrt(var / (reps - 1) / reps) : 0.0;
  return {mean, se};
}

const std::vector<double>& m2_default_omega_grid() {
  static const std::vector<double> grid{1.5, 2.0, 2.5, 3.0, 3.5};
  return grid;
}

WeightChoice m2_best_weight(const M2Params& p, const std::vector<double>& omega_grid,
                            const McConfig& mc, std::uint64_t seed) {
  if (omega_grid.empty()) throw std::invalid_argument("empty omega grid");
  WeightChoice out;
  for (double w : omega_grid) {
    Rng rng(seed);
    out.per_omega.push_back(m2_mc_cost(p, w, mc.horizon, mc.burn_in, mc.reps, rng));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (out.per_omega[i].J < out.per_omega[best].J) best = i;
  // Smallest omega whose estimate is within one standard error of the best.
  std::size_t pick = best;
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    const double se = std::max(out.per_omega[i].stderr_, out.per_omega[best].stderr_);
    if (out.per_omega[i].J <= out.per_omega[best].J + se &&
        (omega_grid[i] < omega_grid[pick])) {
      pick = i;
    }
  }
  out.omega = omega_grid[pick];
  out.cost = out.per_omega[pick];
  return out;
}

namespace {

// In-place thinning of a mass vector m over {0..n} by the geometric departure
// law: k >= 1 receives (1-d) * sum_{j>=k} m[j] d^{j-k}; 0 receives sum m[j] d^j.
void thin(std::vector<double>& m, double d) {
  double suffix = 0.0;
  const int n = static_cast<int>(m.size()) - 1;
  for (int k = n; k >= 1; --k) {
    suffix = m[k] + d * suffix;
    m[k] = (1.0 - d) * suffix;
  }
  m[0] = m[0] + d * suffix;
}

}  // namespace

double m2_stationary_cost(const M2Params& p, double omega, int trunc, double tol) {
  const int n = trunc + 1;
  const double d1 = p.theta1 / (p.theta1 + p.lambda);
  const double d2 = p.theta2 / (p.theta2 + p.lambda);
  std::vector<double> pi(static_cast<std::size_t>(n) * n, 0.0), next(pi.size());
  pi[0] = 1.0;
  auto at = [n](std::vector<double>& v, int i, int j) -> double& {
    return v[static_cast<std::size_t>(i) * n + j];
  };
  std::vector<double> col(n);
  for (int iter = 0; iter < 200000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double m = at(pi, i, j);
        if (m == 0.0) continue;
        if (m2_assign(omega, State{i, j}) == kQueue1)
          at(next, std::min(i + 1, trunc), j) += m;
        else
          at(next, i, std::min(j + 1, trunc)) += m;
      }
    // Queue 1 thinning along i for each j, then queue 2 along j for each i.
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) col[i] = at(next, i, j);
      thin(col, d1);
      for (int i = 0; i < n; ++i) at(next, i, j) = col[i];
    }
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(next.begin() + static_cast<std::ptrdiff_t>(i) * n,
                              next.begin() + static_cast<std::ptrdiff_t>(i + 1) * n);
      thin(row, d2);
      std::copy(row.begin(), row.end(), next.begin() + static_cast<std::ptrdiff_t>(i) * n);
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) diff += std::abs(next[k] - pi[k]);
    pi.swap(next);
    if (diff < tol) break;
  }
  double J = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) J += at(pi, i, j) * (i + j);
  return J;
}

OracleResult M2Oracle::solve(const Theta& theta) const {
  const auto key = std::make_pair(theta.theta1, theta.theta2);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end())
      return {m2_weighted_policy(it->second.first), it->second.second, it->second.first};
  }
  const M2Params p = params(theta);
  double omega = 0.0, J = 0.0;
  if (mode_ == Mode::kMonteCarlo) {
    const WeightChoice c = m2_best_weight(p, grid_, mc_, seed_);
    omega = c.omega;
    J = c.cost.J;
  } else {
    std::vector<double> costs;
    for (double w : grid_) costs.push_back(m2_stationary_cost(p, w));
    std::size_t best = 0;
    for (std::size_t i = 1; i < costs.size(); ++i)
      if (costs[i] < costs[best] - 1e-9) best = i;
    omega = grid_[best];
    J = costs[best];
  }
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, std::make_pair(omega, J));
  return {m2_weighted_policy(omega), J, omega};
}

std::vector<Theta> m2_grid() {
  std::vector<Theta> g;
  for (int j = 5; j <= 19; j += 2)
    for (int i = j + 2; i <= 19; i += 2) g.push_back({i / 10.0, j / 10.0});
  return g;
}

}  // namespace qts
