#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qts/diagnostics.hpp"
#include "qts/harness.hpp"
#include "qts/model_one.hpp"
#include "qts/model_two.hpp"
#include "qts/tsde.hpp"

using namespace qts;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail, double seconds) {
  std::printf("criterion %d %s: %s [%.1fs]\n", n, ok ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string num(double v, int prec = 3) { return fmt(v, prec); }

// R(5000)/5000 < R(1000)/1000 on the mean curve.
bool sublinear(const AggregateCurve& c, double* early, double* late) {
  *early = c.mean[999] / 1000.0;
  *late = c.mean.back() / static_cast<double>(c.t.back());
  return *late < *early;
}

double ls_slope(const std::vector<double>& y, std::size_t lo, std::size_t hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct Runs {
  fs::path root;
  std::map<std::string, ExperimentResult> results;

  const ExperimentResult& get(int model, double lambda, Algorithm a) {
    ExperimentConfig c;
    c.model = model;
    c.lambda = lambda;
    c.algorithm = a;
    c.T = 5000;
    c.reps = 200;
    c.paper_preset = true;
    c.out_dir = (root / c.label()).string();
    auto it = results.find(c.label());
    if (it != results.end()) return it->second;
    return results.emplace(c.label(), run_experiment(c)).first->second;
  }
};

void criterion1() {
  Timer tm;
  struct Row {
    Theta th;
    double omega, J;
  };
  const std::vector<Row> rows = {{{0.7, 0.5}, 1.5, 1.04}, {{1.1, 0.5}, 2.0, 0.67}, {{1.9, 0.5}, 3.5, 0.35},
                                 {{1.5, 0.7}, 2.0, 0.44}, {{1.9, 1.7}, 1.5, 0.28}};
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const WeightChoice w =
        m2_best_weight({0.5, r.th.theta1, r.th.theta2}, m2_default_omega_grid(), McConfig{}, mix_seed(2024, i));
    double best = w.cost.J;
    for (const auto& c : w.per_omega) best = std::min(best, c.J);
    const bool row_ok = std::fabs(w.cost.J - r.J) <= 0.08 && w.cost.J - best <= 0.03;
    ok = ok && row_ok;
    detail += "(" + num(r.th.theta1, 1) + "," + num(r.th.theta2, 1) + ") w=" + num(w.omega, 1) + " J=" +
              num(w.cost.J) + " vs " + num(r.J, 2) + (row_ok ? "" : " !") + "; ";
  }
  report(1, ok, detail, tm.seconds());
}

void criterion2() {
  Timer tm;
  const M1Params p1{0.5, 1.0, 0.5};
  const double rho = p1.lambda / p1.theta1;
  const double j1 = m1_stationary_cost_at(p1, 50, 400).J;
  const bool ok1 = std::fabs(j1 - rho / (1 - rho)) < 1e-3;
  const M2Params p2{0.5, 1.0, 0.5};
  Rng rng(77);
  const CostEstimate c = m2_mc_cost(p2, 1e9, 200000, 20000, 8, rng);
  const bool ok2 = std::fabs(c.J - rho / (1 - rho)) <= 3 * c.stderr_;
  report(2, ok1 && ok2,
         "model1 J=" + fmt(j1, 6) + " vs " + num(rho / (1 - rho)) + "; model2 J=" + num(c.J, 4) + " se " +
             num(c.stderr_, 4),
         tm.seconds());
}

void criterion3() {
  Timer tm;
  Rng rng(314);
  const auto g1 = m1_grid();
  const auto g2 = m2_grid();
  std::size_t bad = 0;
  const std::vector<double> lambdas = {0.3, 0.5, 0.7};
  for (int k = 0; k < 10000; ++k) {
    const Theta th = g1[rng.next() % g1.size()];
    const M1Env env({lambdas[rng.next() % 3], th.theta1, th.theta2});
    const State x{static_cast<int>(rng.next() % 201), static_cast<int>(rng.next() % 2),
                  static_cast<int>(rng.next() % 2)};
    const auto acts = env.feasible_actions(x);
    const auto d = env.transition(x, acts[rng.next() % acts.size()]);
    bool row = std::fabs(d.total() - 1.0) < 1e-12;
    for (const auto& [y, pr] : d.entries) row = row && l1_norm(y) <= l1_norm(x) + 1;
    bad += !row;
  }
  for (int k = 0; k < 10000; ++k) {
    const Theta th = g2[rng.next() % g2.size()];
    const M2Env env({lambdas[rng.next() % 3], th.theta1, th.theta2});
    const State x{static_cast<int>(rng.next() % 201), static_cast<int>(rng.next() % 201)};
    const auto acts = env.feasible_actions(x);
    const auto d = env.transition(x, acts[rng.next() % acts.size()]);
    bool row = std::fabs(d.total() - 1.0) < 1e-12;
    for (const auto& [y, pr] : d.entries) row = row && l1_norm(y) <= l1_norm(x) + 1;
    bad += !row;
  }
  report(3, bad == 0, std::to_string(bad) + " bad rows out of 20000", tm.seconds());
}

void criterion4(const fs::path& root) {
  Timer tm;
  std::ofstream csv(root / "drift_violations.csv");
  write_drift_csv_header(csv);
  const auto s = run_drift_suite({0.3, 0.5, 0.7}, 60,
                                 [&](const DriftSummary& d, const std::vector<DriftRecord>& r) {
                                   if (d.violations) write_drift_rows(csv, d, r, true);
                                 });
  std::map<std::string, std::size_t> viol, checks;
  std::size_t states = 0;
  for (const auto& d : s) {
    const std::string kind = d.spec.substr(0, d.spec.find("-lambda"));
    viol[kind] += d.violations;
    ++checks[kind];
    states += d.states;
  }
  std::size_t total = 0;
  std::string detail;
  for (const auto& [k, v] : viol) {
    total += v;
    detail += k + " " + std::to_string(v) + "/" + std::to_string(checks[k]) + " chains; ";
  }
  report(4, total == 0 && viol.size() == 4,
         detail + std::to_string(states) + " state checks, " + std::to_string(total) + " violations", tm.seconds());
}

void criterion5() {
  Timer tm;
  const HittingSuite h = run_hitting_suite(100000, 5);
  bool ok = !h.tails.empty() && !h.moments.empty();
  std::size_t tail_fail = 0;
  double worst_gap = -1e300;
  for (const auto& t : h.tails) {
    tail_fail += !t.pass;
    worst_gap = std::max(worst_gap, t.empirical - t.bound);
  }
  std::string detail = "tails n<=50 failing " + std::to_string(tail_fail) + " (max emp-bound " +
                       num(worst_gap, 4) + "); ";
  ok = ok && tail_fail == 0;
  for (const auto& m : h.moments) {
    ok = ok && m.pass;
    char b[48];
    std::snprintf(b, sizeof b, "%.3Le", m.bound);
    detail += m.name + " x0=" + m.x0.str() + " E[tau^" + std::to_string(m.order) + "]=" + num(m.empirical, 2) +
              "<=" + b +
              (m.pass ? "" : " !") + "; ";
  }
  report(5, ok, detail, tm.seconds());
}

void criterion6(Runs& runs) {
  Timer tm;
  std::size_t audited = 0, failed = 0;
  for (const auto& [label, res] : runs.results)
    for (const auto& r : res.reps)
      if (r.audited) {
        ++audited;
        failed += !r.audit.pass();
      }
  report(6, audited > 0 && failed == 0,
         std::to_string(audited) + " audited TSDE runs, " + std::to_string(failed) + " failing", tm.seconds());
}

void criterion7(Runs& runs) {
  Timer tm;
  const ExperimentResult& r = runs.get(1, 0.5, Algorithm::kTsde);
  double early, late;
  const bool a = sublinear(r.regret, &early, &late);
  std::vector<std::vector<double>> per;
  for (const auto& rep : r.reps) per.push_back(rep.regret);
  const GrowthFit g = fit_growth_exponent(per);
  const bool b = g.ok && g.beta > 0.3 && g.beta < 0.8;
  const auto& tv = r.tv.mean;
  const double final_tv = tv.back();
  const double slope = ls_slope(tv, tv.size() / 2, tv.size());
  const bool c = final_tv <= 0.2 && slope < 0;
  report(7, a && b && c,
         std::string("(a) ") + (a ? "ok" : "fail") + " R(1000)/1000=" + num(early, 4) + " R(5000)/5000=" +
             num(late, 4) + "; (b) " + (b ? "ok" : "fail") + " beta=" + num(g.beta) + " CI [" + num(g.ci_low) +
             "," + num(g.ci_high) + "]; (c) " + (c ? "ok" : "fail") + " final TV=" + num(final_tv) +
             " last-half slope " + fmt(slope, 8),
         tm.seconds());
}

void criterion8(Runs& runs) {
  Timer tm;
  bool ok = true;
  std::string detail;
  for (int model : {1, 2}) {
    const double r3 = runs.get(model, 0.3, Algorithm::kTsde).final_mean();
    const double r5 = runs.get(model, 0.5, Algorithm::kTsde).final_mean();
    const double r7 = runs.get(model, 0.7, Algorithm::kTsde).final_mean();
    const bool m = r7 > r5 && r5 > r3;
    ok = ok && m;
    detail += "model" + std::to_string(model) + " R(T) " + num(r3, 2) + " < " + num(r5, 2) + " < " +
              num(r7, 2) + (m ? "" : " !") + "; ";
  }
  report(8, ok, detail, tm.seconds());
}

void criterion9(Runs& runs) {
  Timer tm;
  bool ok = true;
  std::string detail;
  for (int model : {1, 2}) {
    const ExperimentResult& ts = runs.get(model, 0.5, Algorithm::kTsde);
    for (Algorithm a : {Algorithm::kRbmle, Algorithm::kAt}) {
      const ExperimentResult& base = runs.get(model, 0.5, a);
      double early, late;
      const bool sub = sublinear(base.regret, &early, &late);
      const double pooled = std::hypot(ts.final_stderr(), base.final_stderr());
      const double gap = ts.final_mean() - base.final_mean();
      const bool hard = gap <= 3 * pooled;
      const std::string soft = gap <= pooled ? "within 1 se" : "above by " + num(gap / pooled, 2) + " se";
      ok = ok && sub && hard;
      detail += "model" + std::to_string(model) + " " + to_string(a) + " R(T)=" + num(base.final_mean(), 1) +
                (sub ? " sublinear" : " NOT sublinear") + ", tsde " + num(ts.final_mean(), 1) + " " + soft +
                (hard ? "" : " !") + "; ";
    }
  }
  report(9, ok, detail, tm.seconds());
}

void criterion10(Runs& runs) {
  Timer tm;
  bool ok = true;
  std::string detail;
  for (auto [model, alg] : {std::pair{1, Algorithm::kTsde}, std::pair{2, Algorithm::kAt}}) {
    const ExperimentResult& first = runs.get(model, 0.5, alg);
    ExperimentConfig c = first.config;
    c.out_dir = (runs.root / "rerun" / c.label()).string();
    run_experiment(c);
    for (const auto& entry : fs::directory_iterator(first.config.out_dir)) {
      const fs::path other = fs::path(c.out_dir) / entry.path().filename();
      const bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
      ok = ok && same;
      if (!same) detail += entry.path().filename().string() + " differs; ";
    }
    detail += c.label() + " compared; ";
  }
  report(10, ok, detail, tm.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::remove_all(root);
  fs::create_directories(root);
  Runs runs{root, {}};
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4(root);
    criterion5();
    // Regret runs first so the audit count covers every TSDE run in the suite.
    Timer regret_clock;
    criterion7(runs);
    criterion8(runs);
    criterion9(runs);
    criterion6(runs);
    criterion10(runs);
    std::printf("regret suites took %.1fs\n", regret_clock.seconds());
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failing\n", failures);
  return failures == 0 ? 0 : 3;
}
