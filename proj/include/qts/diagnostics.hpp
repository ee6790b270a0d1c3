#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qts/core.hpp"
#include "qts/model_one.hpp"
#include "qts/model_two.hpp"

namespace qts {

struct DriftSpec {
  std::function<double(const State&)> V;
  double alpha = 1.0;
  double beta = 0.0;
  double b = 0.0;
  std::function<bool(const State&)> in_C;
  // When non-empty, V(x) = sum_i components[i](x_i); lets product kernels be
  // checked through their marginals.
  std::vector<std::function<double(int)>> components;
};

struct DriftChain {
  std::function<TransitionDistribution(const State&)> kernel;
  // Per-coordinate successor laws; only valid for product kernels.
  std::function<std::vector<std::vector<double>>(const State&)> marginals;
};

struct DriftRecord {
  State x;
  double lhs = 0.0;  // Delta V(x)
  double rhs = 0.0;  // -beta V^alpha + b 1_C
  bool pass = true;
};

struct VOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<DriftRecord> verify_drift(const DriftChain& chain, const DriftSpec& spec,
                                      const std::vector<State>& box);
std::size_t count_violations(const std::vector<DriftRecord>& records);

DriftChain m1_chain(const M1Params& p, int t);
DriftChain m2_chain(const M2Params& p, double omega);

// Model one states reachable from 0 under the threshold policy with x0 <= radius.
std::vector<State> m1_drift_box(int t, int radius);
std::vector<State> m2_drift_box(int radius);

struct M1GeomDrift {
  DriftSpec spec;
  double gamma_g = 0.0;  // contraction factor used by the tail bound, 1 - beta
  std::vector<State> C;
};
M1GeomDrift m1_geom_drift_params(const M1Params& p, int t);

struct PolyDrift {
  DriftSpec spec;
  std::vector<State> C;  // explicit list when it is small enough to enumerate
  std::array<int, 2> box_corner{0, 0};  // Model two only
};
PolyDrift m1_poly_drift_params(const M1Params& p, int t);

struct M2GeomDrift {
  DriftSpec spec;
  double a = 0.0, zeta1 = 0.0, zeta2 = 0.0, gamma_g = 0.0;
  double x1_g1 = 0.0, x2_g1 = 0.0, x1_g2 = 0.0, x2_g2 = 0.0;
  std::array<int, 2> box_corner{0, 0};
};
M2GeomDrift m2_geom_drift_params(const M2Params& p, double omega);
PolyDrift m2_poly_drift_params(const M2Params& p, double omega);

struct PolyBoundParams {
  double beta_p = 0.0;
  double b_p = 0.0;
  double alpha_p = 0.5;
  long double alpha_C = 1.0;
  int r = 1;
};

long double poly_moment_bound(int i, double V_p_at_x, const PolyBoundParams& params);

struct GeomBoundParams {
  double gamma_g = 0.0;
  double b_g = 0.0;
  double C_size = 1.0;
  double max_E_tau = 1.0;

  double b_tilde() const;
  double gamma_tilde() const;
  double c() const;
};

double geom_tail_bound(int n, const GeomBoundParams& params);

// Resolvent sum_{n=0}^{n_max} 2^{-n-2} P^n(x, 0).
double resolvent_K(const std::function<TransitionDistribution(const State&)>& kernel,
                   const State& x, int n_max = 64);
// Lower bound on min_{y in box} K(y) for model two from the one-step term
// 2^{-3} P(y, 0), which stays positive because queues can empty in one interval.
long double m2_resolvent_lower_bound(const M2Params& p, double omega, std::array<int, 2> corner);

struct HittingStats {
  std::int64_t n = 0;
  double mean = 0.0, mean_se = 0.0;
  double second = 0.0, second_se = 0.0;
  std::vector<double> tail;  // tail[k-1] = Pr(tau > k), k = 1..50
  std::vector<std::int64_t> block_sizes;
  std::vector<double> block_max_mean;
  std::vector<std::int64_t> samples;
};

std::int64_t hitting_time(const Environment& env, const Policy& policy, const State& x0, Rng& rng,
                          std::int64_t cap = kDefaultStepCap);
HittingStats empirical_hitting_stats(const Environment& env, const Policy& policy, const State& x0,
                                     std::int64_t n_samples, Rng& rng);

}  // namespace qts
