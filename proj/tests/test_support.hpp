#pragma once

#include <cmath>
#include <vector>

#include "qts/core.hpp"

namespace qts::testing {

// One-dimensional chain that moves x -> x-1 deterministically.
class DecrementEnv : public Environment {
 public:
  int dim() const override { return 1; }
  int num_actions() const override { return 1; }
  Theta theta() const override { return {}; }
  double lambda() const override { return 0.0; }
  TransitionDistribution transition(const State& x, Action) const override {
    State y = x;
    if (y[0] > 0) y[0] -= 1;
    return {{{y, 1.0}}};
  }
  std::vector<Action> feasible_actions(const State&) const override { return {0}; }
};

// States {0,1,2}: 2 -> 1 surely, 1 -> 0 or 1 with probability 1/2 each,
// 0 -> 2 so that return times are defined.
class ToyChain : public Environment {
 public:
  int dim() const override { return 1; }
  int num_actions() const override { return 1; }
  Theta theta() const override { return {}; }
  double lambda() const override { return 0.0; }
  TransitionDistribution transition(const State& x, Action) const override {
    State s0(1), s1(1), s2(1);
    s1[0] = 1;
    s2[0] = 2;
    if (x[0] == 2) return {{{s1, 1.0}}};
    if (x[0] == 1) return {{{s0, 0.5}, {s1, 0.5}}};
    return {{{s2, 1.0}}};
  }
  std::vector<Action> feasible_actions(const State&) const override { return {0}; }
};

// Two-action chain on {0,1} whose move-up probability depends on theta1 and
// the action; used to exercise learners on a tiny grid.
class CoinEnv : public Environment {
 public:
  explicit CoinEnv(double q) : q_(q) {}
  int dim() const override { return 1; }
  int num_actions() const override { return 2; }
  Theta theta() const override { return {q_, 0.0}; }
  double lambda() const override { return 0.0; }
  TransitionDistribution transition(const State& x, Action a) const override {
    State zero(1), one(1);
    one[0] = 1;
    if (x[0] == 1) return {{{zero, 1.0}}};
    const double up = a == 0 ? q_ : 1.0 - q_;
    TransitionDistribution d{{{zero, 1.0 - up}, {one, up}}};
    d.canonicalize();
    return d;
  }
  std::vector<Action> feasible_actions(const State&) const override { return {0, 1}; }

 private:
  double q_;
};

inline State s1(int v) {
  State s(1);
  s[0] = v;
  return s;
}

}  // namespace qts::testing
