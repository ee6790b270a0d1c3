#include "qts/model_one.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace qts {

void M1Params::validate() const {
  if (!(lambda > 0 && theta2 > 0 && theta1 >= theta2))
    throw std::invalid_argument("model one needs lambda > 0 and theta1 >= theta2 > 0");
  if (!(delta > 0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 0.5)");
  if (lambda / (theta1 + theta2) > (1 - delta) / (1 + delta) + 1e-12)
    throw std::invalid_argument("arrival rate violates the stability margin");
  if (theta1 / theta2 > R + 1e-9) throw std::invalid_argument("rate ratio exceeds R");
}

Rates m1_normalized_rates(const M1Params& p) {
  const double total = p.lambda + p.theta1 + p.theta2;
  Rates r;
  r.lambda = p.lambda / total;
  r.theta1 = p.theta1 / total;
  r.theta2 = 1.0 - r.lambda - r.theta1;
  return r;
}

bool m1_feasible(const State& x, Action a) {
  switch (a) {
    case kHold: return true;
    case kServer1: return x[0] >= 1 && x[1] == 0;
    case kServer2: return x[0] >= 1 && x[2] == 0;
    case kBoth: return x[0] >= 2 && x[1] == 0 && x[2] == 0;
    default: return false;
  }
}

State m1_post_action(const State& x, Action a) {
  if (!m1_feasible(x, a)) return x;
  State z = x;
  switch (a) {
    case kServer1: z[0] -= 1; z[1] = 1; break;
    case kServer2: z[0] -= 1; z[2] = 1; break;
    case kBoth: z[0] -= 2; z[1] = 1; z[2] = 1; break;
    default: break;
  }
  return z;
}

namespace {

TransitionDistribution m1_kernel(const Rates& r, const State& x, Action a, int trunc) {
  const State z = m1_post_action(x, a);
  TransitionDistribution d;
  State up = z;
  if (trunc < 0 || z[0] < trunc) up[0] += 1;
  d.entries.emplace_back(up, r.lambda);
  State s1 = z;
  if (z[1] == 1) s1[1] = 0;
  d.entries.emplace_back(s1, r.theta1);
  State s2 = z;
  if (z[2] == 1) s2[2] = 0;
  d.entries.emplace_back(s2, r.theta2);
  d.canonicalize();
  return d;
}

}  // namespace

TransitionDistribution m1_transition(const M1Params& p, const State& x, Action a) {
  return m1_kernel(m1_normalized_rates(p), x, a, -1);
}

Action m1_threshold_action(int t, const State& x) {
  if (x[0] == 0) return kHold;
  if (x[1] == 1 && x[2] == 1) return kHold;
  if (x[1] == 0) return kServer1;
  // x1 = 1, x2 = 0
  return l1_norm(x) >= t + 1 ? kServer2 : kHold;
}

Policy m1_threshold_policy(int t) {
  return [t](const State& x) { return m1_threshold_action(t, x); };
}

int m1_threshold_cap(const M1Params& p) {
  return static_cast<int>(std::ceil(std::sqrt(2.0) * p.theta1 / p.theta2 - 1e-12)) + 1;
}

std::vector<State> m1_reachable_states(int t, int trunc) {
  // Successor support does not depend on the rates, so any positive rates do.
  const Rates r{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<State> order;
  std::unordered_map<State, int, StateHash> seen;
  std::deque<State> frontier;
  State zero{0, 0, 0};
  seen.emplace(zero, 0);
  order.push_back(zero);
  frontier.push_back(zero);
  while (!frontier.empty()) {
    State x = frontier.front();
    frontier.pop_front();
    for (const auto& [y, pr] : m1_kernel(r, x, m1_threshold_action(t, x), trunc).entries) {
      if (seen.emplace(y, static_cast<int>(order.size())).second) {
        order.push_back(y);
        frontier.push_back(y);
      }
    }
  }
  return order;
}

StationaryResult m1_stationary_cost_at(const M1Params& p, int t, int trunc) {
  const Rates r = m1_normalized_rates(p);
  const std::vector<State> states = m1_reachable_states(t, trunc);
  std::unordered_map<State, int, StateHash> index;
  for (std::size_t i = 0; i < states.size(); ++i) index.emplace(states[i], static_cast<int>(i));
  const int n = static_cast<int>(states.size());

  // Solve pi (P - I) = 0 with the first balance equation replaced by sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 4);
  for (int j = 0; j < n; ++j) trip.emplace_back(0, j, 1.0);
  for (int i = 0; i < n; ++i) {
    const State& x = states[i];
    if (i != 0) trip.emplace_back(i, i, -1.0);
    for (const auto& [y, pr] : m1_kernel(r, x, m1_threshold_action(t, x), trunc).entries) {
      const int j = index.at(y);
      if (j != 0) trip.emplace_back(j, i, pr);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("stationary solve failed");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  Eigen::VectorXd pi = solver.solve(b);
  double J = 0.0;
  for (int i = 0; i < n; ++i) J += pi(i) * l1_norm(states[i]);
  return {J, trunc};
}

double m1_stationary_cost(const M1Params& p, int t, int trunc, double tol, int max_doublings) {
  double prev = m1_stationary_cost_at(p, t, trunc).J;
  for (int k = 0; k < max_doublings; ++k) {
    trunc *= 2;
    const double cur = m1_stationary_cost_at(p, t, trunc).J;
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  throw std::runtime_error("truncation insufficient for threshold " + std::to_string(t));
}

int m1_optimal_threshold(const M1Params& p) {
  const int cap = m1_threshold_cap(p);
  double cur = m1_stationary_cost(p, 1);
  for (int i = 1; i <= cap; ++i) {
    const double nxt = m1_stationary_cost(p, i + 1);
    if (cur < nxt - 1e-10) return i;
    cur = nxt;
  }
  throw std::runtime_error("no crossing found");
}

M1Env::M1Env(const M1Params& p) : p_(p), r_(m1_normalized_rates(p)) {}

TransitionDistribution M1Env::transition(const State& x, Action a) const {
  return m1_kernel(r_, x, a, -1);
}

std::vector<Action> M1Env::feasible_actions(const State& x) const {
  std::vector<Action> out;
  for (Action a = 0; a < kM1Actions; ++a)
    if (m1_feasible(x, a)) out.push_back(a);
  return out;
}

double M1Env::probability(const State& x, Action a, const State& y) const {
  const State z = m1_post_action(x, a);
  double pr = 0.0;
  State up = z;
  up[0] += 1;
  if (y == up) pr += r_.lambda;
  State s1 = z;
  s1[1] = 0;
  if (y == s1) pr += r_.theta1;
  State s2 = z;
  s2[2] = 0;
  if (y == s2) pr += r_.theta2;
  return pr;
}

OracleResult M1Oracle::solve(const Theta& theta) const {
  const auto key = std::make_pair(theta.theta1, theta.theta2);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end())
      return {m1_threshold_policy(it->second.first), it->second.second,
              static_cast<double>(it->second.first)};
  }
  const M1Params p = params(theta);
  const int t = m1_optimal_threshold(p);
  const double J = m1_stationary_cost(p, t);
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, std::make_pair(t, J));
  return {m1_threshold_policy(t), J, static_cast<double>(t)};
}

std::vector<Theta> m1_grid() {
  std::vector<Theta> g;
  for (int j = 5; j <= 19; ++j)
    for (int i = j + 1; i <= 19; ++i) g.push_back({i / 10.0, j / 10.0});
  return g;
}

}  // namespace qts
