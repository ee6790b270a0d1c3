#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "qts/bayes.hpp"
#include "qts/core.hpp"

namespace qts {

// Everything a learner needs about the parameter grid, precomputed once and
// shared read-only by all replications.
struct LearningSetup {
  std::vector<Theta> thetas;
  std::vector<std::shared_ptr<const Environment>> models;
  std::vector<OracleResult> oracle;
  std::vector<double> prior;  // empty = uniform
  int num_actions = 0;
  int dim = 0;

  std::vector<const Environment*> model_ptrs() const;
  std::vector<double> costs() const;
};

std::uint64_t pair_key(const State& x, Action a);

using VisitCounts = std::unordered_map<std::uint64_t, std::int64_t>;

enum class StopReason { kFirst, kSecond, kHorizon };
std::string to_string(StopReason r);

struct EpisodeLog {
  int k = 0;
  std::int64_t t_k = 0, t_tilde = 0, t_next = 0;
  std::size_t theta_index = 0;
  std::int64_t T_k = 0, T_tilde = 0, E_k = 0;
  StopReason stop_reason = StopReason::kFirst;
  bool second_triggered = false;
};

struct RunTrace {
  std::vector<double> costs;
  std::vector<Action> actions;
  std::vector<EpisodeLog> episodes;
  int M_T = 0;
  int K_T = 0;
  int K_M = 0;
  std::vector<double> posterior_tv;
  std::vector<double> final_posterior;
};

constexpr std::size_t kNoTruth = std::numeric_limits<std::size_t>::max();

// Separate streams keep environment noise identical across learners that
// share a seed, so a point-mass learner reproduces a standalone policy run.
Rng environment_stream(std::uint64_t seed);
Rng algorithm_stream(std::uint64_t seed);

bool stopping_check(std::int64_t t, std::int64_t t_k, std::int64_t T_tilde_prev,
                    const VisitCounts& counts, const VisitCounts& snapshot);

RunTrace run_tsde(const Environment& truth, const LearningSetup& setup, std::int64_t T,
                  std::uint64_t seed, std::size_t theta_star_index = kNoTruth,
                  std::int64_t settle_cap = kDefaultStepCap);

// Runs a fixed policy for T steps on the environment stream of `seed`.
RunTrace simulate_policy(const Environment& env, const Policy& policy, std::int64_t T,
                         std::uint64_t seed);

std::vector<double> compute_regret(const RunTrace& trace, double J_star);

struct AuditReport {
  int K_T = 0, K_M = 0, M_T = 0;
  double K_M_bound = 0.0, K_T_bound = 0.0;
  bool K_M_pass = false, K_T_pass = false;
  bool pass() const { return K_M_pass && K_T_pass; }
};

AuditReport episode_bound_audit(const RunTrace& trace, int action_count, int d, std::int64_t T);

}  // namespace qts
