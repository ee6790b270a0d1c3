#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "qts/core.hpp"

namespace qts {

// Two parallel server-queue pairs observed just before each arrival.
// Action 0 routes the arrival to queue 1, action 1 to queue 2.
enum M2Action : Action { kQueue1 = 0, kQueue2 = 1 };
constexpr int kM2Actions = 2;

struct M2Params {
  double lambda = 0.5;
  double theta1 = 1.0;
  double theta2 = 0.5;
  double delta = 0.2;
  double R = 3.8;
  double c_R = 1.0;

  Theta theta() const { return {theta1, theta2}; }
  void validate() const;
};

Action m2_assign(double omega, const State& x);
Policy m2_weighted_policy(double omega);

std::vector<double> m2_departure_dist(double lambda, double theta, int n);
double m2_departure_prob(double lambda, double theta, int n, int k);
TransitionDistribution m2_transition(const M2Params& p, const State& x, Action a);

struct McConfig {
  std::int64_t horizon = 200'000;
  std::int64_t burn_in = 20'000;
  int reps = 8;
};

struct CostEstimate {
  double J = 0.0;
  double stderr_ = 0.0;
};

CostEstimate m2_mc_cost(const M2Params& p, double omega, std::int64_t horizon, std::int64_t burn_in,
                        int reps, Rng& rng);

struct WeightChoice {
  double omega = 0.0;
  CostEstimate cost;
  std::vector<CostEstimate> per_omega;
};

const std::vector<double>& m2_default_omega_grid();

// Every omega is evaluated on the same random stream (common random numbers).
WeightChoice m2_best_weight(const M2Params& p, const std::vector<double>& omega_grid,
                            const McConfig& mc, std::uint64_t seed);

// Stationary mean occupancy of the arrival-sampled chain on the box
// [0, trunc]^2, by power iteration that exploits the geometric thinning.
double m2_stationary_cost(const M2Params& p, double omega, int trunc = 150, double tol = 1e-13);

class M2Env : public Environment {
 public:
  explicit M2Env(const M2Params& p) : p_(p) {}
  int dim() const override { return 2; }
  int num_actions() const override { return kM2Actions; }
  Theta theta() const override { return p_.theta(); }
  double lambda() const override { return p_.lambda; }
  TransitionDistribution transition(const State& x, Action a) const override;
  std::vector<Action> feasible_actions(const State&) const override { return {kQueue1, kQueue2}; }
  double probability(const State& x, Action a, const State& y) const override;
  const M2Params& params() const { return p_; }

 private:
  M2Params p_;
};

class M2Oracle : public PolicyOracle {
 public:
  enum class Mode { kExact, kMonteCarlo };
  explicit M2Oracle(double lambda, Mode mode = Mode::kExact,
                    std::vector<double> omega_grid = m2_default_omega_grid(), McConfig mc = {},
                    std::uint64_t seed = 7)
      : lambda_(lambda), mode_(mode), grid_(std::move(omega_grid)), mc_(mc), seed_(seed) {}
  OracleResult solve(const Theta& theta) const override;
  M2Params params(const Theta& theta) const { return {lambda_, theta.theta1, theta.theta2}; }

 private:
  double lambda_;
  Mode mode_;
  std::vector<double> grid_;
  McConfig mc_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<double, double>, std::pair<double, double>> cache_;
};

// {0.5, 0.7, ..., 1.9}^2 with theta2 < theta1, ordered by theta2 then theta1.
std::vector<Theta> m2_grid();

}  // namespace qts
