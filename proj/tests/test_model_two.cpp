#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qts/model_two.hpp"

using namespace qts;

TEST_CASE("weighted assignment and tie rule") {
  CHECK(m2_assign(1.0, State{0, 0}) == kQueue1);
  CHECK(m2_assign(2.0, State{3, 1}) == kQueue1);
  CHECK(m2_assign(2.0, State{5, 1}) == kQueue2);
  for (int a = 0; a < 30; ++a)
    for (int b = 0; b < 30; ++b)
      for (double w : {0.5, 1.0, 1.5, 2.5, 3.5}) {
        const bool first = (1.0 + a) / (1.0 + b) <= w;
        CHECK((m2_assign(w, State{a, b}) == kQueue1) == first);
      }
}

TEST_CASE("departure law examples") {
  const auto d1 = m2_departure_dist(0.5, 1.0, 1);
  REQUIRE(d1.size() == 2);
  CHECK(d1[0] == doctest::Approx(2.0 / 3));
  CHECK(d1[1] == doctest::Approx(1.0 / 3));
  const auto d0 = m2_departure_dist(0.5, 1.0, 0);
  REQUIRE(d0.size() == 1);
  CHECK(d0[0] == 1.0);
  const auto d2 = m2_departure_dist(0.5, 1.0, 2);
  CHECK(d2[2] == doctest::Approx(1.0 / 3));
  CHECK(d2[1] == doctest::Approx(2.0 / 9));
  CHECK(d2[0] == doctest::Approx(4.0 / 9));
  CHECK(m2_departure_prob(0.5, 1.0, 2, 1) == doctest::Approx(2.0 / 9));
}

TEST_CASE("departure law matches an exponential race") {
  std::mt19937_64 eng(42);
  const int samples = 1000000;
  for (auto [lam, th] : {std::pair{0.5, 1.0}, std::pair{0.3, 0.7}, std::pair{0.7, 1.9}}) {
    std::exponential_distribution<double> arrival(lam), service(th);
    for (int n = 1; n <= 5; ++n) {
      std::vector<int> hits(n + 1, 0);
      const int m = n == 5 ? samples : samples / 10;
      for (int s = 0; s < m; ++s) {
        const double gap = arrival(eng);
        double clock = 0.0;
        int left = n;
        while (left > 0) {
          clock += service(eng);
          if (clock > gap) break;
          --left;
        }
        ++hits[left];
      }
      const auto d = m2_departure_dist(lam, th, n);
      for (int k = 0; k <= n; ++k) {
        const double f = static_cast<double>(hits[k]) / m;
        const double se = std::sqrt(d[k] * (1 - d[k]) / m);
        // About 60 comparisons, so each gets a Bonferroni-sized band.
        CHECK(std::fabs(f - d[k]) <= 4 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("transition example and product form") {
  const M2Params p{0.5, 1.0, 0.5};
  const auto d = m2_transition(p, State{0, 0}, kQueue1);
  REQUIRE(d.entries.size() == 2);
  CHECK(d.prob(State{0, 0}) == doctest::Approx(2.0 / 3));
  CHECK(d.prob(State{1, 0}) == doctest::Approx(1.0 / 3));
  const M2Env env(p);
  const auto e = env.transition(State{3, 2}, kQueue2);
  for (const auto& [y, pr] : e.entries) {
    CHECK(pr == doctest::Approx(m2_departure_prob(0.5, 1.0, 3, y[0]) *
                                m2_departure_prob(0.5, 0.5, 3, y[1])));
    CHECK(env.probability(State{3, 2}, kQueue2, y) == doctest::Approx(pr));
  }
  CHECK(env.probability(State{3, 2}, kQueue2, State{4, 0}) == 0.0);
}

TEST_CASE("kernel normalization over the full grid") {
  for (const Theta& th : m2_grid()) {
    const M2Params p{0.5, th.theta1, th.theta2};
    for (int a = 0; a <= 100; a += 9)
      for (int b = 0; b <= 100; b += 11)
        for (Action act : {kQueue1, kQueue2}) {
          const State x{a, b};
          const auto d = m2_transition(p, x, act);
          REQUIRE(std::fabs(d.total() - 1.0) < 1e-12);
          for (const auto& [y, pr] : d.entries) REQUIRE(l1_norm(y) <= l1_norm(x) + 1);
        }
  }
}

TEST_CASE("Monte-Carlo cost with everything routed to queue one is M/M/1 at arrivals") {
  const M2Params p{0.5, 1.0, 0.5};
  Rng rng(5);
  const CostEstimate c = m2_mc_cost(p, 1e9, 200000, 20000, 8, rng);
  CHECK(std::fabs(c.J - 1.0) <= 3 * c.stderr_);
  CHECK(m2_stationary_cost(p, 1e9) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("light traffic and determinism") {
  const M2Params p{0.01, 1.0, 0.5};
  Rng r1(3), r2(3);
  const CostEstimate a = m2_mc_cost(p, 2.0, 20000, 1000, 2, r1);
  const CostEstimate b = m2_mc_cost(p, 2.0, 20000, 1000, 2, r2);
  CHECK(a.J < 0.05);
  CHECK(a.J == b.J);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("exact stationary cost agrees with Monte Carlo") {
  for (auto th : {Theta{0.7, 0.5}, Theta{1.9, 1.7}, Theta{1.5, 0.5}}) {
    const M2Params p{0.5, th.theta1, th.theta2};
    Rng rng(11);
    const CostEstimate c = m2_mc_cost(p, 2.0, 200000, 20000, 8, rng);
    CHECK(std::fabs(m2_stationary_cost(p, 2.0) - c.J) <= 3 * c.stderr_);
  }
}

TEST_CASE("best weight reproduces table rows") {
  const McConfig mc;
  struct Row {
    Theta th;
    double J;
  };
  for (const Row& r : {Row{{0.7, 0.5}, 1.04}, Row{{1.1, 0.5}, 0.67}, Row{{1.9, 1.7}, 0.28}}) {
    const WeightChoice w = m2_best_weight({0.5, r.th.theta1, r.th.theta2}, m2_default_omega_grid(), mc, 1);
    CHECK(std::fabs(w.cost.J - r.J) <= 0.08);
    double best = 1e9;
    for (const auto& c : w.per_omega) best = std::min(best, c.J);
    CHECK(w.cost.J - best <= 0.03);
  }
}

TEST_CASE("best weight prefers the smaller weight on ties") {
  const M2Params p{0.5, 1.0, 0.5};
  McConfig mc;
  mc.horizon = 3000;
  mc.burn_in = 100;
  mc.reps = 2;
  const WeightChoice w = m2_best_weight(p, {2.0, 2.0 + 1e-9}, mc, 4);
  CHECK(w.omega == 2.0);
}

TEST_CASE("oracle cache and equal-rate weight") {
  const M2Oracle o(0.5);
  const OracleResult a = o.solve({1.3, 0.7});
  const OracleResult b = o.solve({1.3, 0.7});
  CHECK(a.J == b.J);
  CHECK(a.param == b.param);
  const M2Oracle eq(0.5, M2Oracle::Mode::kExact, {1.0, 1.5, 2.0});
  CHECK(eq.solve({1.0, 1.0}).param == 1.0);
}

TEST_CASE("best weight is nondecreasing in the rate ratio") {
  const M2Oracle o(0.5);
  std::vector<std::pair<double, double>> pts;
  for (const Theta& th : m2_grid()) pts.emplace_back(th.theta1 / th.theta2, o.solve(th).param);
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first > pts[i - 1].first + 1e-9) CHECK(pts[i].second >= pts[i - 1].second);
}

TEST_CASE("grid shape") {
  const auto g = m2_grid();
  CHECK(g.size() == 28);
  CHECK(g.front().theta1 == doctest::Approx(0.7));
  CHECK(g.back().theta1 == doctest::Approx(1.9));
  CHECK(g.back().theta2 == doctest::Approx(1.7));
}
