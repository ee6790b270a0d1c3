#include "qts/core.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace qts {

State::State(std::initializer_list<int> coords) : dim(static_cast<int>(coords.size())) {
  if (coords.size() > x.size()) throw std::invalid_argument("state dimension above 3");
  std::copy(coords.begin(), coords.end(), x.begin());
}

bool State::is_zero() const {
  for (int i = 0; i < dim; ++i)
    if (x[i] != 0) return false;
  return true;
}

std::string State::str() const {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) out += ",";
    out += std::to_string(x[i]);
  }
  return out + ")";
}

int l1_norm(const State& s) {
  int n = 0;
  for (int i = 0; i < s.dim; ++i) n += s.x[i];
  return n;
}

int l_inf_norm(const State& s) {
  int n = 0;
  for (int i = 0; i < s.dim; ++i) n = std::max(n, s.x[i]);
  return n;
}

double TransitionDistribution::total() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second;
  return s;
}

double TransitionDistribution::prob(const State& y) const {
  for (const auto& e : entries)
    if (e.first == y) return e.second;
  return 0.0;
}

void TransitionDistribution::canonicalize() {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<State, double>> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.second <= 0.0) continue;
    if (!merged.empty() && merged.back().first == e.first)
      merged.back().second += e.second;
    else
      merged.push_back(e);
  }
  entries = std::move(merged);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over both inputs
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(base) ^ (stream * 0xd1342543de82ef95ull + 1));
}

State sample_successor(const TransitionDistribution& dist, double u) {
  double acc = 0.0;
  for (const auto& e : dist.entries) {
    acc += e.second;
    if (u < acc) return e.first;
  }
  // Rounding can leave the last cumulative sum a hair below 1.
  return dist.entries.back().first;
}

ZeroRun run_until_zero(const Environment& env, const Policy& policy, const State& x0, Rng& rng,
                       std::int64_t step_cap) {
  ZeroRun r;
  State x = x0;
  while (!x.is_zero()) {
    if (r.steps >= step_cap)
      throw SettlingOverflow("settling overflow after " + std::to_string(step_cap) +
                             " steps from " + x0.str());
    r.cost_sum += env.cost(x);
    r.path_max_inf_norm = std::max(r.path_max_inf_norm, l_inf_norm(x));
    x = env.step(x, policy(x), rng);
    ++r.steps;
  }
  return r;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qts
