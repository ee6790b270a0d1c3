#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qts/baselines.hpp"
#include "qts/diagnostics.hpp"
#include "qts/model_one.hpp"
#include "qts/model_two.hpp"
#include "qts/tsde.hpp"

namespace qts {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Algorithm { kTsde, kRbmle, kAt };
std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct ExperimentConfig {
  int model = 1;
  double lambda = 0.5;
  Algorithm algorithm = Algorithm::kTsde;
  double rbmle_alpha = 0.5;
  double at_delta = 0.0;  // 0 picks 3.5 for model one and 3 for model two
  std::int64_t T = 5000;
  int reps = 200;
  std::uint64_t base_seed = 1;
  std::string out_dir;
  std::string m2_oracle = "exact";  // "exact" or "mc"
  McConfig mc;
  // Debugging mode: every replication uses this grid index instead of a prior draw.
  std::optional<std::size_t> fixed_theta_index;
  std::int64_t settle_cap = kDefaultStepCap;
  bool paper_preset = false;
  unsigned workers = 0;

  void validate() const;
  double effective_at_delta() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::uint64_t hash() const;
  // Directory-friendly name such as "model1-tsde-lambda0.5".
  std::string label() const;
};

// Named experiment suites. Unknown names raise ConfigError.
std::vector<ExperimentConfig> preset_configs(const std::string& name);
std::vector<std::string> preset_names();

// Grid, per-parameter environments and oracle results for one model and
// arrival rate. Built once per process and shared.
std::shared_ptr<const LearningSetup> learning_setup(int model, double lambda,
                                                    const std::string& m2_oracle = "exact");

std::vector<Policy> at_policy_set(int model);

struct AggregateCurve {
  std::vector<std::int64_t> t;
  std::vector<double> mean;
  std::vector<double> std;
  int reps = 0;
};

AggregateCurve aggregate(const std::vector<std::vector<double>>& per_rep);

struct RepResult {
  int rep = 0;
  std::uint64_t seed = 0;
  std::size_t theta_star_index = 0;
  double J_star = 0.0;
  std::vector<double> regret;
  std::vector<double> tv;
  std::vector<EpisodeLog> episodes;
  AuditReport audit;
  bool audited = false;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepResult> reps;
  AggregateCurve regret;
  AggregateCurve tv;
  bool audits_pass = true;

  double final_mean() const { return regret.mean.empty() ? 0.0 : regret.mean.back(); }
  double final_stderr() const;
};

// Runs every replication and, when config.out_dir is set, writes regret.csv,
// tv.csv, episodes.csv, audit.csv and manifest.json there.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct TableRow {
  Theta theta;
  double omega_star = 0.0;
  double J_hat = 0.0;
  double stderr_ = 0.0;
  std::vector<CostEstimate> per_omega;
};

std::vector<TableRow> estimate_cost_table(double lambda, const McConfig& mc, std::uint64_t seed,
                                          const std::vector<Theta>& thetas = m2_grid());
void write_table_csv(const std::string& path, const std::vector<TableRow>& rows);

struct GrowthFit {
  double beta = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  bool ok = false;
  std::string error;
};

double log_log_slope(const std::vector<std::int64_t>& t, const std::vector<double>& R,
                     std::int64_t lo, std::int64_t hi);
// Slope of log mean-R against log t on [T/10, T]; the CI resamples replications.
GrowthFit fit_growth_exponent(const std::vector<std::vector<double>>& per_rep, int bootstrap = 200,
                              std::uint64_t seed = 12345);

// Fixed-precision number formatting shared by every CSV writer.
std::string fmt(double v, int precision = 6);

void write_regret_csv(const std::string& path, const AggregateCurve& c);
void write_tv_csv(const std::string& path, const AggregateCurve& c);
void write_episodes_csv(const std::string& path, const std::vector<RepResult>& reps);
void write_audit_csv(const std::string& path, const std::vector<RepResult>& reps);
void write_manifest(const std::string& dir, const nlohmann::json& config,
                    const std::vector<std::pair<std::string, std::string>>& artifacts,
                    const std::vector<std::uint64_t>& seeds, const std::string& note = "");

std::uint64_t fnv1a(const std::string& s);

// Drift sweeps over the four Lyapunov specs (model one and two, geometric and
// polynomial), every grid parameter, every policy in the search sets and the
// given arrival rates.
struct DriftSummary {
  std::string spec;  // e.g. "model1-geometric"
  int model = 1;
  double lambda = 0.0;
  Theta theta;
  double param = 0.0;  // threshold or weight
  std::size_t states = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // max of lhs - rhs over the box
};

using DriftSink = std::function<void(const DriftSummary&, const std::vector<DriftRecord>&)>;

std::vector<DriftSummary> run_drift_suite(const std::vector<double>& lambdas, int radius,
                                          const DriftSink& sink = {});
void write_drift_csv_header(std::ostream& os);
void write_drift_rows(std::ostream& os, const DriftSummary& s, const std::vector<DriftRecord>& recs,
                      bool violations_only);

struct MomentCheck {
  std::string name;
  State x0;
  int order = 1;
  double empirical = 0.0;
  double sigma = 0.0;
  long double bound = 0.0L;
  bool pass = false;
};

struct TailCheck {
  int n = 0;
  double empirical = 0.0;
  double sigma = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct HittingSuite {
  std::vector<MomentCheck> moments;
  std::vector<TailCheck> tails;
  GeomBoundParams geom;
  double max_E_tau_empirical = 0.0;
  double max_E_tau_poly = 0.0;
  std::vector<HittingStats> stats;  // one per moment case, same order as names
  std::vector<std::string> names;
};

// Model one at theta=(1.0, 0.5), lambda=0.5 with its optimal threshold for the
// tail check; model one and model two moment checks from the listed x0.
HittingSuite run_hitting_suite(std::int64_t samples, std::uint64_t seed);

}  // namespace qts
