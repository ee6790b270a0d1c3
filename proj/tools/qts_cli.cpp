#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qts/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qts;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAudit = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::int64_t> horizon;
  std::string out = "out";
  std::string preset;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--reps", c.reps, "replication count");
  app->add_option("--horizon", c.horizon, "horizon T");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--preset", c.preset, "named preset");
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

std::vector<ExperimentConfig> run_configs(const Common& c, const std::optional<int>& model,
                                          const std::optional<double>& lambda,
                                          const std::string& algorithm) {
  std::vector<ExperimentConfig> cfgs;
  if (!c.preset.empty()) {
    cfgs = preset_configs(c.preset);
  } else if (!c.config_path.empty()) {
    cfgs.push_back(ExperimentConfig::from_json(read_json(c.config_path)));
  } else {
    cfgs.emplace_back();
  }
  for (auto& cfg : cfgs) {
    if (model) cfg.model = *model;
    if (lambda) cfg.lambda = *lambda;
    if (!algorithm.empty()) cfg.algorithm = parse_algorithm(algorithm);
    if (c.seed) cfg.base_seed = *c.seed;
    if (c.reps) cfg.reps = *c.reps;
    if (c.horizon) cfg.T = *c.horizon;
    cfg.out_dir = cfgs.size() > 1 ? (fs::path(c.out) / cfg.label()).string() : c.out;
    cfg.validate();
  }
  return cfgs;
}

int cmd_run(const Common& c, const std::optional<int>& model, const std::optional<double>& lambda,
            const std::string& algorithm) {
  const auto cfgs = run_configs(c, model, lambda, algorithm);
  bool audits = true;
  for (const auto& cfg : cfgs) {
    const ExperimentResult r = run_experiment(cfg);
    const GrowthFit fit = fit_growth_exponent(
        [&] {
          std::vector<std::vector<double>> v;
          for (const auto& rep : r.reps) v.push_back(rep.regret);
          return v;
        }(),
        0);
    std::printf("%s: final mean regret %.3f (se %.3f), growth exponent %s, audits %s -> %s\n",
                cfg.label().c_str(), r.final_mean(), r.final_stderr(),
                fit.ok ? fmt(fit.beta, 3).c_str() : fit.error.c_str(),
                r.audits_pass ? "pass" : "FAIL", cfg.out_dir.c_str());
    audits = audits && r.audits_pass;
  }
  return audits ? 0 : kExitAudit;
}

int cmd_table(const Common& c, double lambda) {
  if (!c.preset.empty() && c.preset != "table-model2")
    throw ConfigError("table supports only the table-model2 preset");
  McConfig mc;
  if (c.reps) mc.reps = *c.reps;
  if (c.horizon) mc.horizon = *c.horizon;
  if (mc.reps < 1 || mc.horizon < 1) throw ConfigError("invalid mc settings");
  const std::uint64_t seed = c.seed.value_or(1);
  const auto rows = estimate_cost_table(lambda, mc, seed);
  fs::create_directories(c.out);
  write_table_csv((fs::path(c.out) / "table.csv").string(), rows);
  json cfg = {{"lambda", lambda},
              {"seed", seed},
              {"mc", {{"horizon", mc.horizon}, {"burn_in", mc.burn_in}, {"reps", mc.reps}}}};
  write_manifest(c.out, cfg, {{"table.csv", "theta1,theta2,omega_star,J_hat,stderr"}}, {seed});
  for (const auto& r : rows)
    std::printf("(%.1f, %.1f)  omega*=%.1f  J=%.4f +- %.4f\n", r.theta.theta1, r.theta.theta2,
                r.omega_star, r.J_hat, r.stderr_);
  return 0;
}

int cmd_drift(const Common& c, const std::vector<double>& lambdas, int radius, bool all_states) {
  fs::create_directories(c.out);
  const std::string path = (fs::path(c.out) / "drift.csv").string();
  std::ofstream f(path, std::ios::binary);
  write_drift_csv_header(f);
  const auto summaries = run_drift_suite(
      lambdas, radius, [&](const DriftSummary& s, const std::vector<DriftRecord>& recs) {
        write_drift_rows(f, s, recs, !all_states);
      });
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_spec;
  std::size_t total = 0;
  for (const auto& s : summaries) {
    per_spec[s.spec].first += s.states;
    per_spec[s.spec].second += s.violations;
    total += s.violations;
  }
  for (const auto& [spec, v] : per_spec)
    std::printf("%s: %zu states checked, %zu violations\n", spec.c_str(), v.first, v.second);
  json cfg = {{"lambdas", lambdas}, {"radius", radius}, {"all_states", all_states}};
  write_manifest(c.out, cfg,
                 {{"drift.csv", "model,theta1,theta2,policy_param,state,lhs,rhs,pass"}}, {});
  return total == 0 ? 0 : kExitAudit;
}

int cmd_hitting(const Common& c) {
  const std::int64_t n = c.reps.value_or(100000);
  if (n < 2) throw ConfigError("need at least 2 samples");
  const std::uint64_t seed = c.seed.value_or(1);
  const HittingSuite h = run_hitting_suite(n, seed);
  fs::create_directories(c.out);
  {
    std::ofstream f((fs::path(c.out) / "hitting.csv").string(), std::ios::binary);
    f << "case,x0,order,empirical,sigma,bound,pass\n";
    for (const auto& m : h.moments) {
      char b[64];
      std::snprintf(b, sizeof b, "%.6Le", m.bound);
      f << m.name << ",\"" << m.x0.str() << "\"," << m.order << ',' << fmt(m.empirical) << ','
        << fmt(m.sigma) << ',' << b << ',' << (m.pass ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream f((fs::path(c.out) / "tail.csv").string(), std::ios::binary);
    f << "n,empirical,sigma,bound,pass\n";
    for (const auto& t : h.tails)
      f << t.n << ',' << fmt(t.empirical) << ',' << fmt(t.sigma) << ',' << fmt(t.bound, 3) << ','
        << (t.pass ? 1 : 0) << '\n';
  }
  {
    std::ofstream f((fs::path(c.out) / "block_max.csv").string(), std::ios::binary);
    f << "case,x0,block_size,mean_block_max\n";
    for (std::size_t i = 0; i < h.stats.size(); ++i)
      for (std::size_t k = 0; k < h.stats[i].block_sizes.size(); ++k)
        f << h.names[i] << ",\"" << h.moments[2 * i].x0.str() << "\","
          << h.stats[i].block_sizes[k] << ',' << fmt(h.stats[i].block_max_mean[k]) << '\n';
  }
  json cfg = {{"samples", n}, {"seed", seed}};
  write_manifest(c.out, cfg,
                 {{"hitting.csv", "case,x0,order,empirical,sigma,bound,pass"},
                  {"tail.csv", "n,empirical,sigma,bound,pass"},
                  {"block_max.csv", "case,x0,block_size,mean_block_max"}},
                 {seed});
  bool ok = true;
  for (const auto& m : h.moments) ok = ok && m.pass;
  for (const auto& t : h.tails) ok = ok && t.pass;
  std::printf("max E[tau] over C: empirical %.3f, polynomial route %.3f\n", h.max_E_tau_empirical,
              h.max_E_tau_poly);
  std::printf("hitting-time bounds %s\n", ok ? "hold" : "VIOLATED");
  return ok ? 0 : kExitAudit;
}

// Re-audits stored runs: reads audit.csv written by `run` and checks every row.
int cmd_audit(const std::string& dir) {
  const fs::path p = fs::path(dir) / "audit.csv";
  std::ifstream f(p);
  if (!f) throw ConfigError("no audit.csv in " + dir);
  std::string line;
  std::getline(f, line);
  std::size_t rows = 0, failed = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (cols.size() != 8) throw ConfigError("malformed audit row: " + line);
    const double K_T = std::stod(cols[2]), K_M = std::stod(cols[3]);
    const double K_T_bound = std::stod(cols[5]), K_M_bound = std::stod(cols[6]);
    ++rows;
    if (K_T > K_T_bound || K_M > K_M_bound) ++failed;
  }
  std::printf("%zu runs audited, %zu failed\n", rows, failed);
  return failed == 0 ? 0 : kExitAudit;
}

int cmd_oracle(const Common& c, int model, double lambda, const std::string& m2_oracle) {
  const auto setup = learning_setup(model, lambda, m2_oracle);
  fs::create_directories(c.out);
  std::ofstream f((fs::path(c.out) / "oracle.csv").string(), std::ios::binary);
  f << "theta1,theta2,policy_param,J\n";
  for (std::size_t i = 0; i < setup->thetas.size(); ++i)
    f << fmt(setup->thetas[i].theta1, 1) << ',' << fmt(setup->thetas[i].theta2, 1) << ','
      << fmt(setup->oracle[i].param, 1) << ',' << fmt(setup->oracle[i].J) << '\n';
  json cfg = {{"model", model}, {"lambda", lambda}, {"m2_oracle", m2_oracle}};
  write_manifest(c.out, cfg, {{"oracle.csv", "theta1,theta2,policy_param,J"}}, {});
  std::printf("%zu oracle entries written to %s\n", setup->thetas.size(), c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thompson sampling with dynamic episodes on queueing models"};
  app.require_subcommand(1);

  Common run_c, table_c, drift_c, hit_c, oracle_c;
  std::optional<int> run_model;
  std::optional<double> run_lambda;
  std::string run_alg;
  auto* run = app.add_subcommand("run", "run a learning experiment");
  add_common(run, run_c);
  run->add_option("--model", run_model, "1 or 2");
  run->add_option("--lambda", run_lambda, "arrival rate");
  run->add_option("--algorithm", run_alg, "tsde, rbmle or at");

  double table_lambda = 0.5;
  auto* table = app.add_subcommand("table", "model two best-weight cost table");
  add_common(table, table_c);
  table->add_option("--lambda", table_lambda, "arrival rate");

  std::vector<double> drift_lambdas{0.5};
  int radius = 60;
  bool all_states = false;
  auto* drift = app.add_subcommand("drift", "Lyapunov drift sweeps");
  add_common(drift, drift_c);
  drift->add_option("--lambda", drift_lambdas, "arrival rates")->expected(1, -1);
  drift->add_option("--radius", radius, "box radius")->check(CLI::Range(1, 200));
  drift->add_flag("--all-states", all_states, "write every state, not only violations");

  auto* hit = app.add_subcommand("hitting", "hitting-time statistics against bounds");
  add_common(hit, hit_c);

  std::string audit_dir;
  auto* audit = app.add_subcommand("audit", "re-check episode bounds of a stored run");
  audit->add_option("dir", audit_dir, "directory written by run")->required();

  int oracle_model = 1;
  double oracle_lambda = 0.5;
  std::string m2_oracle = "exact";
  auto* oracle = app.add_subcommand("oracle", "precompute policy oracles over a grid");
  add_common(oracle, oracle_c);
  oracle->add_option("--model", oracle_model, "1 or 2")->check(CLI::IsMember({1, 2}));
  oracle->add_option("--lambda", oracle_lambda, "arrival rate");
  oracle->add_option("--m2-oracle", m2_oracle, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) return cmd_run(run_c, run_model, run_lambda, run_alg);
    if (*table) return cmd_table(table_c, table_lambda);
    if (*drift) return cmd_drift(drift_c, drift_lambdas, radius, all_states);
    if (*hit) return cmd_hitting(hit_c);
    if (*audit) return cmd_audit(audit_dir);
    if (*oracle) return cmd_oracle(oracle_c, oracle_model, oracle_lambda, m2_oracle);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
