#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qts/harness.hpp"

using namespace qts;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qts-test-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("reruns write byte-identical artifacts") {
  ExperimentConfig c;
  c.model = 1;
  c.reps = 1;
  c.T = 10;
  c.out_dir = scratch("rerun-a").string();
  run_experiment(c);
  ExperimentConfig d = c;
  d.out_dir = scratch("rerun-b").string();
  run_experiment(d);
  for (const char* f : {"regret.csv", "tv.csv", "episodes.csv", "audit.csv", "manifest.json"}) {
    INFO(f);
    CHECK(fs::exists(fs::path(c.out_dir) / f));
    CHECK(slurp(fs::path(c.out_dir) / f) == slurp(fs::path(d.out_dir) / f));
  }
}

TEST_CASE("artifact headers") {
  ExperimentConfig c;
  c.model = 2;
  c.reps = 2;
  c.T = 30;
  c.out_dir = scratch("headers").string();
  run_experiment(c);
  const fs::path d(c.out_dir);
  CHECK(first_line(d / "regret.csv") == "t,mean,std,reps");
  CHECK(first_line(d / "tv.csv") == "t,mean_tv");
  CHECK(first_line(d / "episodes.csv") == "rep,k,t_k,t_tilde,t_next,theta_index,stop_reason");
  CHECK(first_line(d / "audit.csv") == "rep,theta_star_index,K_T,K_M,M_T,K_T_bound,K_M_bound,pass");
  const auto m = nlohmann::json::parse(slurp(d / "manifest.json"));
  CHECK(m.contains("config"));
  CHECK(m.contains("config_hash"));
  CHECK(m["seeds"].size() == 2);

  ExperimentConfig r = c;
  r.algorithm = Algorithm::kRbmle;
  r.out_dir = scratch("headers-rbmle").string();
  run_experiment(r);
  CHECK_FALSE(fs::exists(fs::path(r.out_dir) / "audit.csv"));
  CHECK(fs::exists(fs::path(r.out_dir) / "regret.csv"));
}

TEST_CASE("aggregate matches a hand average") {
  ExperimentConfig c;
  c.model = 1;
  c.reps = 3;
  c.T = 200;
  const ExperimentResult res = run_experiment(c);
  REQUIRE(res.reps.size() == 3);
  for (std::size_t i = 0; i < 200; i += 37) {
    const double a = res.reps[0].regret[i], b = res.reps[1].regret[i], e = res.reps[2].regret[i];
    const double mean = (a + b + e) / 3;
    const double var = ((a - mean) * (a - mean) + (b - mean) * (b - mean) + (e - mean) * (e - mean)) / 2;
    CHECK(res.regret.mean[i] == doctest::Approx(mean));
    CHECK(res.regret.std[i] == doctest::Approx(std::sqrt(var)));
    CHECK(res.regret.t[i] == static_cast<std::int64_t>(i + 1));
  }
  CHECK(res.regret.reps == 3);
}

TEST_CASE("aggregate of a single replication has zero spread") {
  const AggregateCurve c = aggregate({{1.0, 2.0, 4.0}});
  CHECK(c.mean == std::vector<double>{1.0, 2.0, 4.0});
  for (double s : c.std) CHECK(s == 0.0);
}

TEST_CASE("growth exponent fit") {
  const int T = 5000;
  std::vector<double> sq(T), lin(T), zero(T, 0.0);
  for (int t = 1; t <= T; ++t) {
    sq[t - 1] = 3 * std::sqrt(t);
    lin[t - 1] = 0.2 * t;
  }
  const GrowthFit a = fit_growth_exponent({sq, sq});
  CHECK(a.ok);
  CHECK(a.beta == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(fit_growth_exponent({lin}).beta == doctest::Approx(1.0).epsilon(1e-6));
  const GrowthFit z = fit_growth_exponent({zero});
  CHECK_FALSE(z.ok);
  CHECK(z.error == "nonpositive regret window");

  std::vector<double> noisy = sq, noisy2 = sq;
  for (int t = 0; t < T; ++t) {
    noisy[t] *= 1.1;
    noisy2[t] *= 0.9;
  }
  const GrowthFit n = fit_growth_exponent({noisy, noisy2, sq});
  CHECK(n.ci_low <= n.beta);
  CHECK(n.beta <= n.ci_high);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.lambda = 0.4;
  c.paper_preset = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.reps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.model = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.fixed_theta_index = 105;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_algorithm("ucb"), ConfigError);
  CHECK(parse_algorithm("at") == Algorithm::kAt);
}

TEST_CASE("config JSON round trip and unknown keys") {
  ExperimentConfig c;
  c.model = 2;
  c.lambda = 0.7;
  c.algorithm = Algorithm::kRbmle;
  c.T = 1234;
  c.base_seed = 99;
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.label() == "model2-rbmle-lambda0.7");

  ExperimentConfig moved = c;
  moved.out_dir = "/elsewhere";
  CHECK(moved.hash() == c.hash());

  auto j = c.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()), ConfigError);
  auto h = nlohmann::json::object();
  h["horizon"] = 777;
  CHECK(ExperimentConfig::from_json(h).T == 777);
}

TEST_CASE("presets") {
  for (const auto& name : preset_names()) {
    const auto cs = preset_configs(name);
    CHECK_FALSE(cs.empty());
    for (const auto& c : cs) CHECK_NOTHROW(c.validate());
  }
  CHECK(preset_configs("fig2-model1-desk").size() == 3);
  CHECK_THROWS_AS(preset_configs("nope"), ConfigError);
  CHECK(ExperimentConfig{}.effective_at_delta() == 3.5);
  ExperimentConfig m2;
  m2.model = 2;
  CHECK(m2.effective_at_delta() == 3.0);
}

TEST_CASE("cost table rows") {
  McConfig mc;
  mc.horizon = 60000;
  mc.burn_in = 5000;
  mc.reps = 4;
  const auto rows = estimate_cost_table(0.5, mc, 7, {{0.7, 0.5}, {1.5, 0.5}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].omega_star == 1.5);
  CHECK(std::fabs(rows[0].J_hat - 1.04) <= 0.1);
  CHECK(std::fabs(rows[1].J_hat - 0.47) <= 0.05);
  CHECK(rows[1].per_omega.size() == 5);

  const fs::path d = scratch("table");
  write_table_csv((d / "table.csv").string(), rows);
  CHECK(first_line(d / "table.csv") == "theta1,theta2,omega_star,J_hat,stderr");
}

TEST_CASE("number formatting") {
  CHECK(fmt(-0.0, 3) == "0.000");
  CHECK(fmt(1.23456, 2) == "1.23");
  CHECK(fnv1a("") == 14695981039346656037ull);
}

TEST_CASE("log-log slope on an exact power") {
  std::vector<std::int64_t> t;
  std::vector<double> R;
  for (int i = 1; i <= 100; ++i) {
    t.push_back(i);
    R.push_back(std::pow(i, 0.7));
  }
  CHECK(log_log_slope(t, R, 10, 100) == doctest::Approx(0.7));
}

TEST_CASE("drift suite on a small radius has no violations") {
  std::size_t rows = 0;
  const auto s = run_drift_suite({0.5}, 12, [&](const DriftSummary&, const std::vector<DriftRecord>&) { ++rows; });
  CHECK(rows == s.size());
  CHECK(s.size() > 100);
  for (const auto& d : s) CHECK(d.violations == 0);
  std::ostringstream os;
  write_drift_csv_header(os);
  CHECK(os.str() == "model,theta1,theta2,policy_param,state,lhs,rhs,pass\n");
}
