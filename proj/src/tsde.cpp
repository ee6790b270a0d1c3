#include "qts/tsde.hpp"

#include <algorithm>
#include <cmath>

namespace qts {

std::vector<const Environment*> LearningSetup::model_ptrs() const {
  std::vector<const Environment*> out;
  for (const auto& m : models) out.push_back(m.get());
  return out;
}

std::vector<double> LearningSetup::costs() const {
  std::vector<double> out;
  for (const auto& o : oracle) out.push_back(o.J);
  return out;
}

std::uint64_t pair_key(const State& x, Action a) {
  std::uint64_t k = static_cast<std::uint64_t>(a) & 0xF;
  for (int i = 0; i < x.dim; ++i) k = (k << 20) | (static_cast<std::uint64_t>(x[i]) & 0xFFFFF);
  return k;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kFirst: return "first";
    case StopReason::kSecond: return "second";
    case StopReason::kHorizon: return "horizon";
  }
  return "unknown";
}

Rng environment_stream(std::uint64_t seed) { return Rng(mix_seed(seed, 1)); }
Rng algorithm_stream(std::uint64_t seed) { return Rng(mix_seed(seed, 2)); }

bool stopping_check(std::int64_t t, std::int64_t t_k, std::int64_t T_tilde_prev,
                    const VisitCounts& counts, const VisitCounts& snapshot) {
  if (t > t_k + T_tilde_prev) return true;
  for (const auto& [key, n] : counts) {
    auto it = snapshot.find(key);
    const std::int64_t base = it == snapshot.end() ? 0 : it->second;
    if (n > 2 * base) return true;
  }
  return false;
}

RunTrace run_tsde(const Environment& truth, const LearningSetup& setup, std::int64_t T,
                  std::uint64_t seed, std::size_t theta_star_index, std::int64_t settle_cap) {
  Rng env_rng = environment_stream(seed);
  Rng alg_rng = algorithm_stream(seed);
  PosteriorGrid post(setup.thetas, setup.prior);
  const auto models = setup.model_ptrs();
  std::vector<double> lik(models.size());

  RunTrace tr;
  tr.costs.reserve(static_cast<std::size_t>(T));
  tr.actions.reserve(static_cast<std::size_t>(T));
  VisitCounts counts;
  State x = truth.initial_state();
  std::int64_t t = 1;
  std::int64_t T_tilde_prev = 1;

  auto record = [&](const State& s, Action a) {
    tr.costs.push_back(truth.cost(s));
    tr.actions.push_back(a);
    tr.M_T = std::max(tr.M_T, l_inf_norm(s));
    if (theta_star_index != kNoTruth) tr.posterior_tv.push_back(tv_to_truth(post, theta_star_index));
  };

  int k = 0;
  while (t <= T) {
    EpisodeLog ep;
    ep.k = ++k;
    ep.t_k = t;
    const VisitCounts snapshot = counts;
    ep.theta_index = post.sample_index(alg_rng);
    const Policy& pol = setup.oracle[ep.theta_index].policy;

    bool doubled = false;
    while (true) {
      if (t > T) {
        ep.stop_reason = StopReason::kHorizon;
        break;
      }
      if (doubled) {
        ep.stop_reason = StopReason::kSecond;
        break;
      }
      if (t > ep.t_k + T_tilde_prev) {
        ep.stop_reason = StopReason::kFirst;
        break;
      }
      const Action a = pol(x);
      record(x, a);
      const std::uint64_t key = pair_key(x, a);
      const std::int64_t n = ++counts[key];
      auto it = snapshot.find(key);
      if (n > 2 * (it == snapshot.end() ? 0 : it->second)) doubled = true;
      const State y = truth.step(x, a, env_rng);
      for (std::size_t i = 0; i < models.size(); ++i) lik[i] = models[i]->probability(x, a, y);
      post.update(lik);
      x = y;
      ++t;
    }
    ep.second_triggered = ep.stop_reason == StopReason::kSecond;
    ep.t_tilde = t;
    ep.T_tilde = t - ep.t_k;

    std::int64_t settled = 0;
    while (!x.is_zero() && t <= T) {
      if (++settled > settle_cap)
        throw SettlingOverflow("settling overflow in episode " + std::to_string(ep.k) +
                               " at t=" + std::to_string(t));
      const Action a = pol(x);
      record(x, a);
      x = truth.step(x, a, env_rng);
      ++t;
    }
    if (!x.is_zero()) ep.stop_reason = StopReason::kHorizon;
    ep.t_next = t;
    ep.T_k = t - ep.t_k;
    ep.E_k = ep.T_k - ep.T_tilde;
    T_tilde_prev = ep.T_tilde;
    if (ep.second_triggered) ++tr.K_M;
    tr.episodes.push_back(ep);
  }
  tr.K_T = static_cast<int>(tr.episodes.size());
  tr.final_posterior = post.weights();
  return tr;
}

RunTrace simulate_policy(const Environment& env, const Policy& policy, std::int64_t T,
                         std::uint64_t seed) {
  Rng env_rng = environment_stream(seed);
  RunTrace tr;
  State x = env.initial_state();
  for (std::int64_t t = 1; t <= T; ++t) {
    const Action a = policy(x);
    tr.costs.push_back(env.cost(x));
    tr.actions.push_back(a);
    tr.M_T = std::max(tr.M_T, l_inf_norm(x));
    x = env.step(x, a, env_rng);
  }
  return tr;
}

std::vector<double> compute_regret(const RunTrace& trace, double J_star) {
  std::vector<double> R(trace.costs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    acc += trace.costs[i];
    R[i] = acc - static_cast<double>(i + 1) * J_star;
  }
  return R;
}

AuditReport episode_bound_audit(const RunTrace& trace, int action_count, int d, std::int64_t T) {
  if (T < 2) throw std::invalid_argument("episode audit needs T >= 2");
  AuditReport r;
  r.K_T = trace.K_T;
  r.K_M = trace.K_M;
  r.M_T = trace.M_T;
  const double pairs = action_count * std::pow(r.M_T + 1.0, d);
  const double lg = std::log2(static_cast<double>(T));
  r.K_M_bound = 2.0 * pairs * lg;
  r.K_T_bound = 2.0 * std::sqrt(pairs * static_cast<double>(T) * lg);
  r.K_M_pass = r.K_M <= r.K_M_bound;
  r.K_T_pass = r.K_T <= r.K_T_bound;
  return r;
}

}  // namespace qts
