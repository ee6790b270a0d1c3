#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qts/tsde.hpp"

namespace qts {

struct AtEntry {
  std::int64_t b = 0;
  std::int64_t a = 0;
};

AtEntry at_schedule(double delta, int p, int i);

// Certainty equivalence with forcing. Each super-episode explores every
// policy for one recurrence cycle of the zero state, then plays the empirical
// minimizer until a_i - a_{i-1} cycles have completed in that super-episode.
RunTrace run_agrawal_teneketzis(const Environment& truth, const std::vector<Policy>& policies,
                                std::int64_t T, double delta, std::uint64_t seed,
                                std::int64_t cycle_cap = kDefaultStepCap);

RunTrace run_rbmle(const Environment& truth, const LearningSetup& setup, double alpha,
                   std::int64_t T, std::uint64_t seed, std::size_t theta_star_index = kNoTruth);

}  // namespace qts
