#include "qts/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qts {

AtEntry at_schedule(double delta, int p, int i) {
  if (i < 1 || delta <= 0 || p < 1) throw std::invalid_argument("at_schedule needs i,p >= 1, delta > 0");
  AtEntry e;
  std::int64_t sum_b = 0;
  for (int k = 1; k <= i; ++k) {
    const auto b = static_cast<std::int64_t>(
        std::floor(std::exp(std::pow(static_cast<long double>(k), 1.0L / (1.0L + delta)))));
    sum_b += b;
    e.b = b;
  }
  e.a = sum_b + static_cast<std::int64_t>(i) * p;
  return e;
}

RunTrace run_agrawal_teneketzis(const Environment& truth, const std::vector<Policy>& policies,
                                std::int64_t T, double delta, std::uint64_t seed,
                                std::int64_t cycle_cap) {
  if (policies.empty()) throw std::invalid_argument("empty policy set");
  Rng env_rng = environment_stream(seed);
  const int p = static_cast<int>(policies.size());
  std::vector<double> est_cost(p, 0.0), est_steps(p, 0.0);
  RunTrace tr;
  State x = truth.initial_state();
  std::int64_t t = 1;

  // One recurrence cycle from the zero state; returns false when the horizon cut it.
  auto cycle = [&](const Policy& pol, double* cost, double* steps) {
    std::int64_t n = 0;
    do {
      if (t > T) return false;
      if (++n > cycle_cap) throw SettlingOverflow("settling overflow in a recurrence cycle");
      const Action a = pol(x);
      const double c = truth.cost(x);
      tr.costs.push_back(c);
      tr.actions.push_back(a);
      tr.M_T = std::max(tr.M_T, l_inf_norm(x));
      if (cost) *cost += c;
      if (steps) *steps += 1;
      x = truth.step(x, a, env_rng);
      ++t;
    } while (!x.is_zero());
    return true;
  };

  std::int64_t a_prev = 0;
  for (int i = 1; t <= T; ++i) {
    const AtEntry s = at_schedule(delta, p, i);
    EpisodeLog ep;
    ep.k = i;
    ep.t_k = t;
    std::int64_t cycles = 0;
    for (int j = 0; j < p && t <= T; ++j) {
      double c = 0.0, n = 0.0;
      if (cycle(policies[j], &c, &n)) {
        est_cost[j] += c;
        est_steps[j] += n;
      }
      ++cycles;
    }
    int best = 0;
    double best_avg = std::numeric_limits<double>::infinity();
    for (int j = 0; j < p; ++j) {
      if (est_steps[j] <= 0) continue;
      const double avg = est_cost[j] / est_steps[j];
      if (avg < best_avg) {
        best_avg = avg;
        best = j;
      }
    }
    ep.t_tilde = t;
    ep.theta_index = static_cast<std::size_t>(best);
    for (; cycles < s.a - a_prev && t <= T; ++cycles) cycle(policies[best], nullptr, nullptr);
    ep.t_next = t;
    ep.T_k = t - ep.t_k;
    ep.T_tilde = ep.t_tilde - ep.t_k;
    ep.E_k = ep.T_k - ep.T_tilde;
    ep.stop_reason = t > T ? StopReason::kHorizon : StopReason::kFirst;
    tr.episodes.push_back(ep);
    a_prev = s.a;
  }
  tr.K_T = static_cast<int>(tr.episodes.size());
  return tr;
}

RunTrace run_rbmle(const Environment& truth, const LearningSetup& setup, double alpha,
                   std::int64_t T, std::uint64_t seed, std::size_t theta_star_index) {
  Rng env_rng = environment_stream(seed);
  PosteriorGrid post(setup.thetas, setup.prior);
  const auto models = setup.model_ptrs();
  const std::vector<double> J = setup.costs();
  std::vector<double> lik(models.size());
  RunTrace tr;
  State x = truth.initial_state();
  for (std::int64_t t = 1; t <= T; ++t) {
    const std::size_t idx = t == 1 ? post.mode_index() : penalized_map(post, J, alpha, t);
    const Action a = setup.oracle[idx].policy(x);
    tr.costs.push_back(truth.cost(x));
    tr.actions.push_back(a);
    tr.M_T = std::max(tr.M_T, l_inf_norm(x));
    if (theta_star_index != kNoTruth) tr.posterior_tv.push_back(tv_to_truth(post, theta_star_index));
    const State y = truth.step(x, a, env_rng);
    for (std::size_t i = 0; i < models.size(); ++i) lik[i] = models[i]->probability(x, a, y);
    post.update(lik);
    x = y;
  }
  tr.final_posterior = post.weights();
  return tr;
}

}  // namespace qts
