#include "qts/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qts {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void normalize(std::vector<double>& lw) {
  const double mx = *std::max_element(lw.begin(), lw.end());
  double s = 0.0;
  for (double v : lw) s += std::exp(v - mx);
  const double lz = mx + std::log(s);
  for (double& v : lw) v -= lz;
}
}  // namespace

PosteriorGrid::PosteriorGrid(std::vector<Theta> thetas, const std::vector<double>& prior_weights)
    : thetas_(std::move(thetas)), log_w_(thetas_.size()), loglik_(thetas_.size(), 0.0) {
  if (thetas_.empty()) throw std::invalid_argument("empty parameter grid");
  if (!prior_weights.empty()) {
    if (prior_weights.size() != thetas_.size())
      throw std::invalid_argument("prior weight count does not match the grid");
    for (std::size_t i = 0; i < thetas_.size(); ++i) {
      if (!(prior_weights[i] > 0)) throw std::invalid_argument("prior weights must be positive");
      log_w_[i] = std::log(prior_weights[i]);
    }
  }
  normalize(log_w_);
}

double PosteriorGrid::weight(std::size_t i) const { return std::exp(log_w_[i]); }

std::vector<double> PosteriorGrid::weights() const {
  std::vector<double> w(log_w_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w_[i]);
  return w;
}

void PosteriorGrid::update(const std::vector<double>& likelihoods) {
  bool any = false;
  for (std::size_t i = 0; i < log_w_.size(); ++i)
    if (likelihoods[i] > 0 && log_w_[i] != kNegInf) any = true;
  if (!any) throw AllZeroLikelihood("all-zero likelihood");
  for (std::size_t i = 0; i < log_w_.size(); ++i) {
    const double ll = likelihoods[i] > 0 ? std::log(likelihoods[i]) : kNegInf;
    log_w_[i] += ll;
    loglik_[i] += ll;
  }
  normalize(log_w_);
}

std::size_t PosteriorGrid::sample_index(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < log_w_.size(); ++i) {
    if (log_w_[i] == kNegInf) continue;
    acc += std::exp(log_w_[i]);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t PosteriorGrid::mode_index() const {
  return static_cast<std::size_t>(std::max_element(log_w_.begin(), log_w_.end()) - log_w_.begin());
}

void posterior_update(PosteriorGrid& post, const State& x, Action a, const State& y,
                      const std::vector<const Environment*>& models) {
  std::vector<double> lik(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) lik[i] = models[i]->probability(x, a, y);
  post.update(lik);
}

Theta sample_theta(const PosteriorGrid& post, Rng& rng) {
  return post.thetas()[post.sample_index(rng)];
}

double tv_to_truth(const PosteriorGrid& post, std::size_t theta_star_index) {
  return 1.0 - post.weight(theta_star_index);
}

std::size_t penalized_map(const PosteriorGrid& post, const std::vector<double>& J, double alpha,
                          std::int64_t t) {
  const double lt = std::log(static_cast<double>(t));
  std::size_t best = 0;
  double best_score = kNegInf;
  for (std::size_t i = 0; i < post.size(); ++i) {
    const double s = post.loglik_sums()[i] - alpha * J[i] * lt;
    // Scores equal up to rounding count as ties and keep the earlier index.
    if (s > best_score + 1e-12 * std::max(1.0, std::abs(best_score == kNegInf ? 0.0 : best_score))) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

}  // namespace qts
