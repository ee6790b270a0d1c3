#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "qts/core.hpp"

namespace qts {

// Two heterogeneous servers sharing one buffer, observed at uniformized event
// epochs. State (x0, x1, x2): queue length and the busy flags of both servers.
enum M1Action : Action { kHold = 0, kBoth = 1, kServer1 = 2, kServer2 = 3 };
constexpr int kM1Actions = 4;

struct M1Params {
  double lambda = 0.5;
  double theta1 = 1.0;
  double theta2 = 0.5;
  double delta = 0.2;
  double R = 3.8;

  Theta theta() const { return {theta1, theta2}; }
  // Throws std::invalid_argument on stability or ratio violations.
  void validate() const;
};

struct Rates {
  double lambda, theta1, theta2;
};

Rates m1_normalized_rates(const M1Params& p);
bool m1_feasible(const State& x, Action a);
State m1_post_action(const State& x, Action a);
TransitionDistribution m1_transition(const M1Params& p, const State& x, Action a);
Action m1_threshold_action(int t, const State& x);
Policy m1_threshold_policy(int t);

int m1_threshold_cap(const M1Params& p);
// All states with x0 <= trunc reachable from 0 under the threshold policy.
std::vector<State> m1_reachable_states(int t, int trunc);

struct StationaryResult {
  double J = 0.0;
  int trunc = 0;
};

StationaryResult m1_stationary_cost_at(const M1Params& p, int t, int trunc);
double m1_stationary_cost(const M1Params& p, int t, int trunc = 200, double tol = 1e-8,
                          int max_doublings = 5);
int m1_optimal_threshold(const M1Params& p);

class M1Env : public Environment {
 public:
  explicit M1Env(const M1Params& p);
  int dim() const override { return 3; }
  int num_actions() const override { return kM1Actions; }
  Theta theta() const override { return p_.theta(); }
  double lambda() const override { return p_.lambda; }
  TransitionDistribution transition(const State& x, Action a) const override;
  std::vector<Action> feasible_actions(const State& x) const override;
  double probability(const State& x, Action a, const State& y) const override;
  const M1Params& params() const { return p_; }

 private:
  M1Params p_;
  Rates r_;
};

class M1Oracle : public PolicyOracle {
 public:
  explicit M1Oracle(double lambda, double delta = 0.2, double R = 3.8)
      : lambda_(lambda), delta_(delta), R_(R) {}
  OracleResult solve(const Theta& theta) const override;
  M1Params params(const Theta& theta) const { return {lambda_, theta.theta1, theta.theta2, delta_, R_}; }

 private:
  double lambda_, delta_, R_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<double, double>, std::pair<int, double>> cache_;
};

// {0.5, 0.6, ..., 1.9}^2 with theta2 < theta1, ordered by theta2 then theta1.
std::vector<Theta> m1_grid();

}  // namespace qts
