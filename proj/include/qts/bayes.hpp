#pragma once

#include <vector>

#include "qts/core.hpp"

namespace qts {

struct AllZeroLikelihood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Posterior over a finite parameter grid, kept in log space.
class PosteriorGrid {
 public:
  PosteriorGrid() = default;
  // Uniform prior when `prior_weights` is empty; otherwise arbitrary positive weights.
  explicit PosteriorGrid(std::vector<Theta> thetas, const std::vector<double>& prior_weights = {});

  std::size_t size() const { return thetas_.size(); }
  const std::vector<Theta>& thetas() const { return thetas_; }
  const std::vector<double>& log_weights() const { return log_w_; }
  const std::vector<double>& loglik_sums() const { return loglik_; }
  double weight(std::size_t i) const;
  std::vector<double> weights() const;

  // likelihoods[i] = P_{theta_i}(y | x, a).
  void update(const std::vector<double>& likelihoods);
  std::size_t sample_index(Rng& rng) const;
  std::size_t mode_index() const;

 private:
  std::vector<Theta> thetas_;
  std::vector<double> log_w_;
  std::vector<double> loglik_;
};

void posterior_update(PosteriorGrid& post, const State& x, Action a, const State& y,
                      const std::vector<const Environment*>& models);
Theta sample_theta(const PosteriorGrid& post, Rng& rng);
double tv_to_truth(const PosteriorGrid& post, std::size_t theta_star_index);
std::size_t penalized_map(const PosteriorGrid& post, const std::vector<double>& J, double alpha,
                          std::int64_t t);

}  // namespace qts
