#include "qts/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace qts {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTsde: return "tsde";
    case Algorithm::kRbmle: return "rbmle";
    case Algorithm::kAt: return "at";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "tsde") return Algorithm::kTsde;
  if (s == "rbmle") return Algorithm::kRbmle;
  if (s == "at") return Algorithm::kAt;
  throw ConfigError("unknown algorithm '" + s + "' (expected tsde, rbmle or at)");
}

namespace {

std::size_t grid_size(int model) { return model == 1 ? m1_grid().size() : m2_grid().size(); }

bool is_paper_lambda(double l) {
  for (double v : {0.3, 0.5, 0.7})
    if (std::fabs(l - v) < 1e-12) return true;
  return false;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model != 1 && model != 2) throw ConfigError("model must be 1 or 2");
  if (reps < 1) throw ConfigError("reps must be at least 1");
  if (T < 2) throw ConfigError("horizon T must be at least 2");
  if (!(lambda > 0 && lambda < 1)) throw ConfigError("lambda must lie in (0, 1)");
  if (paper_preset && !is_paper_lambda(lambda))
    throw ConfigError("replication presets use lambda in {0.3, 0.5, 0.7}");
  if (!(rbmle_alpha > 0)) throw ConfigError("rbmle alpha must be positive");
  if (!(at_delta >= 0)) throw ConfigError("at delta must be nonnegative");
  if (m2_oracle != "exact" && m2_oracle != "mc") throw ConfigError("m2_oracle must be exact or mc");
  if (mc.horizon < 1 || mc.burn_in < 0 || mc.reps < 1) throw ConfigError("invalid mc settings");
  if (settle_cap < 1) throw ConfigError("settle_cap must be positive");
  if (fixed_theta_index && *fixed_theta_index >= grid_size(model))
    throw ConfigError("fixed_theta_index outside the parameter grid");
}

double ExperimentConfig::effective_at_delta() const {
  if (at_delta > 0) return at_delta;
  return model == 1 ? 3.5 : 3.0;
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = model;
  j["lambda"] = lambda;
  j["algorithm"] = to_string(algorithm);
  j["rbmle_alpha"] = rbmle_alpha;
  j["at_delta"] = effective_at_delta();
  j["T"] = T;
  j["reps"] = reps;
  j["seed"] = base_seed;
  j["m2_oracle"] = m2_oracle;
  j["mc"] = {{"horizon", mc.horizon}, {"burn_in", mc.burn_in}, {"reps", mc.reps}};
  if (fixed_theta_index) j["fixed_theta_index"] = *fixed_theta_index;
  j["settle_cap"] = settle_cap;
  j["paper_preset"] = paper_preset;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  static const std::set<std::string> known = {
      "model", "lambda", "algorithm", "rbmle_alpha", "at_delta", "T", "horizon", "reps", "seed",
      "m2_oracle", "mc", "fixed_theta_index", "settle_cap", "paper_preset", "out_dir", "workers"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  ExperimentConfig c;
  try {
    c.model = j.value("model", c.model);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    c.rbmle_alpha = j.value("rbmle_alpha", c.rbmle_alpha);
    c.at_delta = j.value("at_delta", c.at_delta);
    c.T = j.value("T", j.value("horizon", c.T));
    c.reps = j.value("reps", c.reps);
    c.base_seed = j.value("seed", c.base_seed);
    c.m2_oracle = j.value("m2_oracle", c.m2_oracle);
    if (j.contains("mc")) {
      const json& m = j.at("mc");
      c.mc.horizon = m.value("horizon", c.mc.horizon);
      c.mc.burn_in = m.value("burn_in", c.mc.burn_in);
      c.mc.reps = m.value("reps", c.mc.reps);
    }
    if (j.contains("fixed_theta_index"))
      c.fixed_theta_index = j.at("fixed_theta_index").get<std::size_t>();
    c.settle_cap = j.value("settle_cap", c.settle_cap);
    c.paper_preset = j.value("paper_preset", c.paper_preset);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_json().dump()); }

std::string ExperimentConfig::label() const {
  std::ostringstream os;
  os << "model" << model << "-" << to_string(algorithm) << "-lambda" << fmt(lambda, 1);
  return os.str();
}

std::vector<std::string> preset_names() {
  return {"fig2-model1-desk", "fig2-model2-desk", "baselines-model1-desk", "baselines-model2-desk",
          "smoke"};
}

std::vector<ExperimentConfig> preset_configs(const std::string& name) {
  std::vector<ExperimentConfig> out;
  auto base = [](int model) {
    ExperimentConfig c;
    c.model = model;
    c.T = 5000;
    c.reps = 200;
    c.paper_preset = true;
    return c;
  };
  if (name == "fig2-model1-desk" || name == "fig2-model2-desk") {
    const int model = name == "fig2-model1-desk" ? 1 : 2;
    for (double l : {0.3, 0.5, 0.7}) {
      ExperimentConfig c = base(model);
      c.lambda = l;
      out.push_back(c);
    }
  } else if (name == "baselines-model1-desk" || name == "baselines-model2-desk") {
    const int model = name == "baselines-model1-desk" ? 1 : 2;
    for (Algorithm a : {Algorithm::kTsde, Algorithm::kRbmle, Algorithm::kAt}) {
      ExperimentConfig c = base(model);
      c.algorithm = a;
      out.push_back(c);
    }
  } else if (name == "smoke") {
    ExperimentConfig c = base(1);
    c.reps = 2;
    c.T = 200;
    out.push_back(c);
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return out;
}

std::shared_ptr<const LearningSetup> learning_setup(int model, double lambda,
                                                    const std::string& m2_oracle) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, std::string>, std::shared_ptr<const LearningSetup>> cache;
  const auto key = std::make_tuple(model, lambda, model == 1 ? std::string() : m2_oracle);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto s = std::make_shared<LearningSetup>();
  std::unique_ptr<PolicyOracle> oracle;
  if (model == 1) {
    s->thetas = m1_grid();
    s->num_actions = kM1Actions;
    s->dim = 3;
    auto o = std::make_unique<M1Oracle>(lambda);
    for (const Theta& th : s->thetas) s->models.push_back(std::make_shared<M1Env>(o->params(th)));
    oracle = std::move(o);
  } else if (model == 2) {
    s->thetas = m2_grid();
    s->num_actions = kM2Actions;
    s->dim = 2;
    auto mode = m2_oracle == "mc" ? M2Oracle::Mode::kMonteCarlo : M2Oracle::Mode::kExact;
    auto o = std::make_unique<M2Oracle>(lambda, mode);
    for (const Theta& th : s->thetas) s->models.push_back(std::make_shared<M2Env>(o->params(th)));
    oracle = std::move(o);
  } else {
    throw ConfigError("model must be 1 or 2");
  }
  s->oracle.resize(s->thetas.size());
  parallel_for(s->thetas.size(), [&](std::size_t i) { s->oracle[i] = oracle->solve(s->thetas[i]); });
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(s)).first->second;
}

std::vector<Policy> at_policy_set(int model) {
  std::vector<Policy> out;
  if (model == 1) {
    const int top = static_cast<int>(std::ceil(std::sqrt(2.0) * M1Params{}.R)) + 1;
    for (int t = 1; t <= top; ++t) out.push_back(m1_threshold_policy(t));
  } else {
    for (double w : m2_default_omega_grid()) out.push_back(m2_weighted_policy(w));
  }
  return out;
}

AggregateCurve aggregate(const std::vector<std::vector<double>>& per_rep) {
  AggregateCurve c;
  c.reps = static_cast<int>(per_rep.size());
  if (per_rep.empty()) return c;
  const std::size_t n = per_rep.front().size();
  for (const auto& r : per_rep)
    if (r.size() != n) throw std::invalid_argument("replication curves differ in length");
  c.t.resize(n);
  c.mean.assign(n, 0.0);
  c.std.assign(n, 0.0);
  const double m = static_cast<double>(per_rep.size());
  for (std::size_t i = 0; i < n; ++i) {
    c.t[i] = static_cast<std::int64_t>(i + 1);
    double s = 0.0;
    for (const auto& r : per_rep) s += r[i];
    const double mean = s / m;
    double ss = 0.0;
    for (const auto& r : per_rep) ss += (r[i] - mean) * (r[i] - mean);
    c.mean[i] = mean;
    c.std[i] = per_rep.size() > 1 ? std::sqrt(ss / (m - 1)) : 0.0;
  }
  return c;
}

double ExperimentResult::final_stderr() const {
  if (regret.std.empty() || regret.reps < 1) return 0.0;
  return regret.std.back() / std::sqrt(static_cast<double>(regret.reps));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto setup = learning_setup(config.model, config.lambda, config.m2_oracle);
  const std::vector<Policy> at_set =
      config.algorithm == Algorithm::kAt ? at_policy_set(config.model) : std::vector<Policy>{};

  ExperimentResult res;
  res.config = config;
  res.reps.resize(static_cast<std::size_t>(config.reps));
  parallel_for(
      res.reps.size(),
      [&](std::size_t r) {
        RepResult& out = res.reps[r];
        out.rep = static_cast<int>(r);
        out.seed = mix_seed(config.base_seed, r);
        try {
          if (config.fixed_theta_index) {
            out.theta_star_index = *config.fixed_theta_index;
          } else {
            Rng draw(mix_seed(out.seed, 3));
            out.theta_star_index = PosteriorGrid(setup->thetas, setup->prior).sample_index(draw);
          }
          const Environment& truth = *setup->models[out.theta_star_index];
          out.J_star = setup->oracle[out.theta_star_index].J;
          RunTrace tr;
          switch (config.algorithm) {
            case Algorithm::kTsde:
              tr = run_tsde(truth, *setup, config.T, out.seed, out.theta_star_index,
                            config.settle_cap);
              out.audit = episode_bound_audit(tr, setup->num_actions, setup->dim, config.T);
              out.audited = true;
              break;
            case Algorithm::kRbmle:
              tr = run_rbmle(truth, *setup, config.rbmle_alpha, config.T, out.seed,
                             out.theta_star_index);
              break;
            case Algorithm::kAt:
              tr = run_agrawal_teneketzis(truth, at_set, config.T, config.effective_at_delta(),
                                          out.seed, config.settle_cap);
              break;
          }
          out.regret = compute_regret(tr, out.J_star);
          out.tv = std::move(tr.posterior_tv);
          out.episodes = std::move(tr.episodes);
        } catch (const std::exception& e) {
          throw std::runtime_error("replication " + std::to_string(r) + ": " + e.what());
        }
      },
      config.workers);

  std::vector<std::vector<double>> regrets, tvs;
  for (const auto& r : res.reps) {
    regrets.push_back(r.regret);
    if (!r.tv.empty()) tvs.push_back(r.tv);
    if (r.audited && !r.audit.pass()) res.audits_pass = false;
  }
  res.regret = aggregate(regrets);
  res.tv = aggregate(tvs);

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    std::vector<std::pair<std::string, std::string>> artifacts;
    write_regret_csv((dir / "regret.csv").string(), res.regret);
    artifacts.emplace_back("regret.csv", "t,mean,std,reps");
    if (!tvs.empty()) {
      write_tv_csv((dir / "tv.csv").string(), res.tv);
      artifacts.emplace_back("tv.csv", "t,mean_tv");
    }
    if (config.algorithm != Algorithm::kRbmle) {
      write_episodes_csv((dir / "episodes.csv").string(), res.reps);
      artifacts.emplace_back("episodes.csv", "rep,k,t_k,t_tilde,t_next,theta_index,stop_reason");
    }
    if (config.algorithm == Algorithm::kTsde) {
      write_audit_csv((dir / "audit.csv").string(), res.reps);
      artifacts.emplace_back("audit.csv",
                             "rep,theta_star_index,K_T,K_M,M_T,K_T_bound,K_M_bound,pass");
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& r : res.reps) seeds.push_back(r.seed);
    const std::string note =
        config.model == 1
            ? "time axis counts uniformized transitions, including dummy self-loop events"
            : "time axis counts arrival epochs";
    write_manifest(config.out_dir, config.to_json(), artifacts, seeds, note);
  }
  return res;
}

std::vector<TableRow> estimate_cost_table(double lambda, const McConfig& mc, std::uint64_t seed,
                                          const std::vector<Theta>& thetas) {
  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const M2Params p{lambda, thetas[i].theta1, thetas[i].theta2};
    const WeightChoice w = m2_best_weight(p, m2_default_omega_grid(), mc, mix_seed(seed, i));
    TableRow row;
    row.theta = thetas[i];
    row.omega_star = w.omega;
    row.J_hat = w.cost.J;
    row.stderr_ = w.cost.stderr_;
    row.per_omega = w.per_omega;
    rows.push_back(row);
  }
  return rows;
}

std::string fmt(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::fabs(v) < 0.5 * std::pow(10.0, -precision)) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

namespace {

std::ofstream open_csv(const std::string& path, const std::string& header) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << header << '\n';
  return f;
}

}  // namespace

void write_table_csv(const std::string& path, const std::vector<TableRow>& rows) {
  auto f = open_csv(path, "theta1,theta2,omega_star,J_hat,stderr");
  for (const auto& r : rows)
    f << fmt(r.theta.theta1, 1) << ',' << fmt(r.theta.theta2, 1) << ',' << fmt(r.omega_star, 1)
      << ',' << fmt(r.J_hat, 4) << ',' << fmt(r.stderr_, 4) << '\n';
}

void write_regret_csv(const std::string& path, const AggregateCurve& c) {
  auto f = open_csv(path, "t,mean,std,reps");
  for (std::size_t i = 0; i < c.t.size(); ++i)
    f << c.t[i] << ',' << fmt(c.mean[i]) << ',' << fmt(c.std[i]) << ',' << c.reps << '\n';
}

void write_tv_csv(const std::string& path, const AggregateCurve& c) {
  auto f = open_csv(path, "t,mean_tv");
  for (std::size_t i = 0; i < c.t.size(); ++i) f << c.t[i] << ',' << fmt(c.mean[i]) << '\n';
}

void write_episodes_csv(const std::string& path, const std::vector<RepResult>& reps) {
  auto f = open_csv(path, "rep,k,t_k,t_tilde,t_next,theta_index,stop_reason");
  for (const auto& r : reps)
    for (const auto& e : r.episodes)
      f << r.rep << ',' << e.k << ',' << e.t_k << ',' << e.t_tilde << ',' << e.t_next << ','
        << e.theta_index << ',' << to_string(e.stop_reason) << '\n';
}

void write_audit_csv(const std::string& path, const std::vector<RepResult>& reps) {
  auto f = open_csv(path, "rep,theta_star_index,K_T,K_M,M_T,K_T_bound,K_M_bound,pass");
  for (const auto& r : reps)
    f << r.rep << ',' << r.theta_star_index << ',' << r.audit.K_T << ',' << r.audit.K_M << ','
      << r.audit.M_T << ',' << fmt(r.audit.K_T_bound, 3) << ',' << fmt(r.audit.K_M_bound, 3) << ','
      << (r.audit.pass() ? 1 : 0) << '\n';
}

void write_manifest(const std::string& dir, const json& config,
                    const std::vector<std::pair<std::string, std::string>>& artifacts,
                    const std::vector<std::uint64_t>& seeds, const std::string& note) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  json m;
  m["config"] = config;
  m["config_hash"] = hash;
  m["seeds"] = seeds;
  json arts = json::array();
  for (const auto& [file, schema] : artifacts)
    arts.push_back({{"file", file}, {"schema", schema}, {"config_hash", hash}});
  m["artifacts"] = arts;
  if (!note.empty()) m["note"] = note;
  std::ofstream f((fs::path(dir) / "manifest.json").string(), std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << m.dump(2) << '\n';
}

double log_log_slope(const std::vector<std::int64_t>& t, const std::vector<double>& R,
                     std::int64_t lo, std::int64_t hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size() && i < R.size(); ++i) {
    if (t[i] < lo || t[i] > hi || !(R[i] > 0)) continue;
    const double x = std::log(static_cast<double>(t[i])), y = std::log(R[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double nn = static_cast<double>(n);
  const double den = sxx - sx * sx / nn;
  if (!(den > 0)) return std::nan("");
  return (sxy - sx * sy / nn) / den;
}

GrowthFit fit_growth_exponent(const std::vector<std::vector<double>>& per_rep, int bootstrap,
                              std::uint64_t seed) {
  GrowthFit g;
  const AggregateCurve c = aggregate(per_rep);
  if (c.t.empty()) {
    g.error = "empty curve";
    return g;
  }
  const std::int64_t T = c.t.back();
  const std::int64_t lo = std::max<std::int64_t>(1, T / 10);
  g.beta = log_log_slope(c.t, c.mean, lo, T);
  if (std::isnan(g.beta)) {
    g.error = "nonpositive regret window";
    return g;
  }
  g.ok = true;
  g.ci_low = g.ci_high = g.beta;
  if (per_rep.size() < 2 || bootstrap < 1) return g;

  Rng rng(seed);
  const std::size_t m = per_rep.size(), n = c.t.size();
  std::vector<double> slopes;
  std::vector<double> mean(n);
  for (int b = 0; b < bootstrap; ++b) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& r = per_rep[static_cast<std::size_t>(rng.uniform() * m) % m];
      for (std::size_t i = 0; i < n; ++i) mean[i] += r[i];
    }
    for (double& v : mean) v /= static_cast<double>(m);
    const double s = log_log_slope(c.t, mean, lo, T);
    if (!std::isnan(s)) slopes.push_back(s);
  }
  if (slopes.empty()) return g;
  std::sort(slopes.begin(), slopes.end());
  auto q = [&](double p) {
    const double pos = p * (slopes.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - i;
    return i + 1 < slopes.size() ? slopes[i] * (1 - f) + slopes[i + 1] * f : slopes[i];
  };
  g.ci_low = q(0.025);
  g.ci_high = q(0.975);
  return g;
}

namespace {

struct DriftTask {
  int kind = 0;  // 0 m1 geometric, 1 m1 polynomial, 2 m2 geometric, 3 m2 polynomial
  double lambda = 0.0;
  Theta theta;
  double param = 0.0;
};

const char* kDriftSpecNames[] = {"model1-geometric", "model1-polynomial", "model2-geometric",
                                 "model2-polynomial"};

}  // namespace

std::vector<DriftSummary> run_drift_suite(const std::vector<double>& lambdas, int radius,
                                          const DriftSink& sink) {
  std::vector<DriftTask> tasks;
  const int t_top = static_cast<int>(std::ceil(std::sqrt(2.0) * M1Params{}.R)) + 1;
  for (int kind = 0; kind < 4; ++kind)
    for (double l : lambdas) {
      if (kind < 2) {
        for (const Theta& th : m1_grid())
          for (int t = 1; t <= t_top; ++t) tasks.push_back({kind, l, th, static_cast<double>(t)});
      } else {
        for (const Theta& th : m2_grid())
          for (double w : m2_default_omega_grid()) tasks.push_back({kind, l, th, w});
      }
    }

  std::map<int, std::vector<State>> m1_boxes;
  for (int t = 1; t <= t_top; ++t) m1_boxes[t] = m1_drift_box(t, radius);
  const std::vector<State> m2_box = m2_drift_box(radius);

  std::vector<DriftSummary> out(tasks.size());
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < tasks.size(); start += chunk) {
    const std::size_t stop = std::min(tasks.size(), start + chunk);
    std::vector<std::vector<DriftRecord>> recs(stop - start);
    parallel_for(stop - start, [&](std::size_t j) {
      const DriftTask& k = tasks[start + j];
      DriftSummary& s = out[start + j];
      s.spec = kDriftSpecNames[k.kind];
      s.model = k.kind < 2 ? 1 : 2;
      s.lambda = k.lambda;
      s.theta = k.theta;
      s.param = k.param;
      std::vector<DriftRecord> r;
      if (k.kind < 2) {
        const M1Params p{k.lambda, k.theta.theta1, k.theta.theta2};
        const int t = static_cast<int>(k.param);
        const DriftSpec spec =
            k.kind == 0 ? m1_geom_drift_params(p, t).spec : m1_poly_drift_params(p, t).spec;
        r = verify_drift(m1_chain(p, t), spec, m1_boxes.at(t));
      } else {
        const M2Params p{k.lambda, k.theta.theta1, k.theta.theta2};
        const DriftSpec spec = k.kind == 2 ? m2_geom_drift_params(p, k.param).spec
                                           : m2_poly_drift_params(p, k.param).spec;
        r = verify_drift(m2_chain(p, k.param), spec, m2_box);
      }
      s.states = r.size();
      s.violations = count_violations(r);
      s.worst_margin = -std::numeric_limits<double>::infinity();
      for (const auto& d : r) s.worst_margin = std::max(s.worst_margin, d.lhs - d.rhs);
      if (sink) recs[j] = std::move(r);
    });
    if (sink)
      for (std::size_t j = 0; j < recs.size(); ++j) sink(out[start + j], recs[j]);
  }
  return out;
}

void write_drift_csv_header(std::ostream& os) {
  os << "model,theta1,theta2,policy_param,state,lhs,rhs,pass\n";
}

void write_drift_rows(std::ostream& os, const DriftSummary& s, const std::vector<DriftRecord>& recs,
                      bool violations_only) {
  for (const auto& r : recs) {
    if (violations_only && r.pass) continue;
    os << s.spec << "-lambda" << fmt(s.lambda, 1) << ',' << fmt(s.theta.theta1, 1) << ','
       << fmt(s.theta.theta2, 1) << ',' << fmt(s.param, 1) << ",\"" << r.x.str() << "\","
       << fmt(r.lhs, 9) << ',' << fmt(r.rhs, 9) << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

HittingSuite run_hitting_suite(std::int64_t samples, std::uint64_t seed) {
  HittingSuite h;
  std::uint64_t stream = 0;
  auto next_rng = [&]() { return Rng(mix_seed(seed, stream++)); };

  // Model one, theta = (1.0, 0.5), lambda = 0.5, optimal threshold.
  const M1Params p1{0.5, 1.0, 0.5};
  const int t_star = m1_optimal_threshold(p1);
  const M1Env env1(p1);
  const Policy pol1 = m1_threshold_policy(t_star);
  const M1GeomDrift g = m1_geom_drift_params(p1, t_star);
  const PolyDrift d1 = m1_poly_drift_params(p1, t_star);
  const auto kernel1 = [&p1, t_star](const State& x) {
    return m1_transition(p1, x, m1_threshold_action(t_star, x));
  };
  double min_K = std::numeric_limits<double>::infinity();
  for (const State& y : d1.C) min_K = std::min(min_K, resolvent_K(kernel1, y));
  PolyBoundParams q1;
  q1.beta_p = d1.spec.beta;
  q1.b_p = d1.spec.b;
  q1.alpha_C = 1.0L / min_K;

  // Two routes to max E[tau] over C \ {0}: empirical upper confidence limits
  // and the first-moment polynomial bound; the smaller one is used.
  const std::int64_t per_state = std::max<std::int64_t>(1000, samples / 10);
  h.max_E_tau_empirical = 0.0;
  h.max_E_tau_poly = 0.0;
  for (const State& y : g.C) {
    if (y.is_zero()) continue;
    Rng rng = next_rng();
    const HittingStats st = empirical_hitting_stats(env1, pol1, y, per_state, rng);
    h.max_E_tau_empirical = std::max(h.max_E_tau_empirical, st.mean + 2.576 * st.mean_se);
    h.max_E_tau_poly = std::max(
        h.max_E_tau_poly, static_cast<double>(poly_moment_bound(1, d1.spec.V(y), q1)));
  }
  h.geom.gamma_g = g.gamma_g;
  h.geom.b_g = g.spec.b;
  h.geom.C_size = static_cast<double>(g.C.size());
  h.geom.max_E_tau = std::min(h.max_E_tau_empirical, h.max_E_tau_poly);

  {
    Rng rng = next_rng();
    const HittingStats ret = empirical_hitting_stats(env1, pol1, State(3), samples, rng);
    for (int n = 1; n <= 50; ++n) {
      TailCheck c;
      c.n = n;
      c.empirical = ret.tail[n - 1];
      c.sigma = std::sqrt(c.empirical * (1 - c.empirical) / static_cast<double>(samples));
      c.bound = geom_tail_bound(n, h.geom);
      c.pass = c.empirical <= c.bound + 3 * c.sigma;
      h.tails.push_back(c);
    }
  }

  // Model two at its best weight.
  const M2Params p2{0.5, 1.0, 0.5};
  const double w_star = M2Oracle(0.5).solve(p2.theta()).param;
  const M2Env env2(p2);
  const Policy pol2 = m2_weighted_policy(w_star);
  const PolyDrift d2 = m2_poly_drift_params(p2, w_star);
  PolyBoundParams q2;
  q2.beta_p = d2.spec.beta;
  q2.b_p = d2.spec.b;
  q2.alpha_C = 1.0L / m2_resolvent_lower_bound(p2, w_star, d2.box_corner);

  struct Case {
    std::string name;
    const Environment* env;
    const Policy* pol;
    const PolyDrift* drift;
    const PolyBoundParams* q;
    State x0;
  };
  const std::vector<Case> cases = {
      {"model1 t=" + std::to_string(t_star), &env1, &pol1, &d1, &q1, State{1, 1, 0}},
      {"model1 t=" + std::to_string(t_star), &env1, &pol1, &d1, &q1, State{5, 1, 1}},
      {"model2 w=" + fmt(w_star, 1), &env2, &pol2, &d2, &q2, State{1, 0}},
      {"model2 w=" + fmt(w_star, 1), &env2, &pol2, &d2, &q2, State{5, 5}},
  };
  for (const Case& c : cases) {
    Rng rng = next_rng();
    const HittingStats st = empirical_hitting_stats(*c.env, *c.pol, c.x0, samples, rng);
    const double V = c.drift->spec.V(c.x0);
    for (int i = 1; i <= 2; ++i) {
      MomentCheck m;
      m.name = c.name;
      m.x0 = c.x0;
      m.order = i;
      m.empirical = i == 1 ? st.mean : st.second;
      m.sigma = i == 1 ? st.mean_se : st.second_se;
      m.bound = poly_moment_bound(i, V, *c.q);
      m.pass = static_cast<long double>(m.empirical) <= m.bound + 3.0L * m.sigma;
      h.moments.push_back(m);
    }
    h.names.push_back(c.name);
    h.stats.push_back(st);
  }
  return h;
}

}  // namespace qts
