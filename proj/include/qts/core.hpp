#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qts {

// Small fixed-capacity integer state; coordinates beyond `dim` are always zero
// so comparisons and hashing only need the first `dim` entries.
struct State {
  std::array<int, 3> x{0, 0, 0};
  int dim = 0;

  State() = default;
  explicit State(int d) : dim(d) {}
  State(std::initializer_list<int> coords);

  int operator[](int i) const { return x[i]; }
  int& operator[](int i) { return x[i]; }

  bool is_zero() const;
  std::string str() const;

  friend bool operator==(const State& a, const State& b) {
    return a.dim == b.dim && a.x == b.x;
  }
  friend bool operator<(const State& a, const State& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.x < b.x;
  }
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < s.dim; ++i) {
      h ^= static_cast<std::uint64_t>(s.x[i]) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

int l1_norm(const State& s);
int l_inf_norm(const State& s);

using Action = int;

// Lexicographically ordered (state, probability) list.
struct TransitionDistribution {
  std::vector<std::pair<State, double>> entries;

  double total() const;
  double prob(const State& y) const;
  // Sorts entries and merges duplicate states.
  void canonicalize();
};

struct Theta {
  double theta1 = 0.0;
  double theta2 = 0.0;
  friend bool operator==(const Theta& a, const Theta& b) {
    return a.theta1 == b.theta1 && a.theta2 == b.theta2;
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform double in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

State sample_successor(const TransitionDistribution& dist, double u);

using Policy = std::function<Action(const State&)>;

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int dim() const = 0;
  virtual int num_actions() const = 0;
  virtual Theta theta() const = 0;
  virtual double lambda() const = 0;
  virtual TransitionDistribution transition(const State& x, Action a) const = 0;
  virtual std::vector<Action> feasible_actions(const State& x) const = 0;

  virtual double cost(const State& x) const { return l1_norm(x); }
  virtual State initial_state() const { return State(dim()); }
  // P(y | x, a); models override with closed forms.
  virtual double probability(const State& x, Action a, const State& y) const {
    return transition(x, a).prob(y);
  }
  virtual State step(const State& x, Action a, Rng& rng) const {
    return sample_successor(transition(x, a), rng.uniform());
  }
};

struct OracleResult {
  Policy policy;
  double J = 0.0;
  double param = 0.0;  // threshold t or weight omega
};

class PolicyOracle {
 public:
  virtual ~PolicyOracle() = default;
  virtual OracleResult solve(const Theta& theta) const = 0;
};

struct SettlingOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroRun {
  std::int64_t steps = 0;
  double cost_sum = 0.0;
  int path_max_inf_norm = 0;
};

constexpr std::int64_t kDefaultStepCap = 10'000'000;

ZeroRun run_until_zero(const Environment& env, const Policy& policy, const State& x0, Rng& rng,
                       std::int64_t step_cap = kDefaultStepCap);

// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots by the caller so reductions stay ordered.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers = 0);

}  // namespace qts
