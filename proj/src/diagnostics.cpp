#include "qts/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qts {

std::vector<DriftRecord> verify_drift(const DriftChain& chain, const DriftSpec& spec,
                                      const std::vector<State>& box) {
  const bool separable = !spec.components.empty() && chain.marginals;
  std::vector<DriftRecord> out;
  out.reserve(box.size());
  for (const State& x : box) {
    const double vx = spec.V(x);
    if (!std::isfinite(vx)) throw VOverflow("V overflow at " + x.str());
    double pv = 0.0;
    if (separable) {
      const auto marg = chain.marginals(x);
      for (std::size_t i = 0; i < marg.size(); ++i)
        for (std::size_t k = 0; k < marg[i].size(); ++k)
          pv += marg[i][k] * spec.components[i](static_cast<int>(k));
    } else {
      for (const auto& [y, pr] : chain.kernel(x).entries) pv += pr * spec.V(y);
    }
    if (!std::isfinite(pv)) throw VOverflow("V overflow next to " + x.str());
    DriftRecord r;
    r.x = x;
    r.lhs = pv - vx;
    r.rhs = -spec.beta * std::pow(vx, spec.alpha) + (spec.in_C(x) ? spec.b : 0.0);
    r.pass = r.lhs <= r.rhs + 1e-9;
    out.push_back(r);
  }
  return out;
}

std::size_t count_violations(const std::vector<DriftRecord>& records) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const DriftRecord& r) { return !r.pass; }));
}

DriftChain m1_chain(const M1Params& p, int t) {
  DriftChain c;
  c.kernel = [p, t](const State& x) { return m1_transition(p, x, m1_threshold_action(t, x)); };
  return c;
}

DriftChain m2_chain(const M2Params& p, double omega) {
  DriftChain c;
  c.kernel = [p, omega](const State& x) { return m2_transition(p, x, m2_assign(omega, x)); };
  c.marginals = [p, omega](const State& x) {
    State z = x;
    z[m2_assign(omega, x) == kQueue1 ? 0 : 1] += 1;
    return std::vector<std::vector<double>>{m2_departure_dist(p.lambda, p.theta1, z[0]),
                                            m2_departure_dist(p.lambda, p.theta2, z[1])};
  };
  return c;
}

std::vector<State> m1_drift_box(int t, int radius) {
  std::vector<State> s = m1_reachable_states(t, radius + 1);
  s.erase(std::remove_if(s.begin(), s.end(), [radius](const State& x) { return x[0] > radius; }),
          s.end());
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<State> m2_drift_box(int radius) {
  std::vector<State> s;
  for (int i = 0; i <= radius; ++i)
    for (int j = 0; j <= radius; ++j) s.push_back(State{i, j});
  return s;
}

M1GeomDrift m1_geom_drift_params(const M1Params& p, int t) {
  const double base = 1.0 / (1.0 - p.delta);
  const double s = p.theta1 + p.theta2;
  // rho bounds PV/V away from the set C; the drift coefficient is (1 - rho)/2.
  const double rho = (s * (1 - p.delta) + p.lambda / (1 - p.delta)) / (s + p.lambda);
  M1GeomDrift g;
  g.spec.V = [base](const State& x) { return std::pow(base, l1_norm(x)); };
  g.spec.alpha = 1.0;
  g.spec.beta = 0.5 - 0.5 * rho;
  g.gamma_g = 1.0 - g.spec.beta;
  // (1,0,0) follows any arrival to the empty system, so C covers it even for t = 1.
  const int idle_top = std::max(t, 2);
  g.spec.in_C = [idle_top](const State& x) {
    return (x[2] == 0 && x[0] < idle_top) || (x[0] == 0 && x[1] == 0 && x[2] == 1);
  };
  for (int x0 = 0; x0 < idle_top; ++x0)
    for (int x1 = 0; x1 <= 1; ++x1) g.C.push_back(State{x0, x1, 0});
  g.C.push_back(State{0, 0, 1});
  std::sort(g.C.begin(), g.C.end());
  for (const State& x : g.C) g.spec.b = std::max(g.spec.b, std::pow(base, l1_norm(x) + 1));
  return g;
}

PolyDrift m1_poly_drift_params(const M1Params& p, int t) {
  const double s = p.theta1 + p.theta2;
  const double busy_bound = 2 * p.lambda / (s - p.lambda);
  PolyDrift d;
  d.spec.V = [](const State& x) {
    const double n = l1_norm(x);
    return n * n;
  };
  d.spec.alpha = 0.5;
  d.spec.beta = 1.0 - 2 * p.lambda / (s + p.lambda);
  const int idle_top = std::max(t, 2);
  d.spec.in_C = [idle_top, busy_bound](const State& x) {
    return (x[2] == 0 && x[0] < idle_top) || (x[0] < busy_bound && x[1] + x[2] >= 1);
  };
  const int top = std::max(idle_top, static_cast<int>(std::ceil(busy_bound)));
  for (int x0 = 0; x0 <= top; ++x0)
    for (int x1 = 0; x1 <= 1; ++x1)
      for (int x2 = 0; x2 <= 1; ++x2) {
        State x{x0, x1, x2};
        if (d.spec.in_C(x)) d.C.push_back(x);
      }
  for (const State& x : d.C) {
    const double n = l1_norm(x) + 1.0;
    d.spec.b = std::max(d.spec.b, n * n);
  }
  return d;
}

namespace {

// Corner of a box set; log arguments that are not positive mean the defining
// inequality already holds at zero.
double safe_corner(double scale, double arg) {
  if (!(arg > 0) || !std::isfinite(arg)) return 0.0;
  return std::max(0.0, scale * std::log(arg));
}

}  // namespace

M2GeomDrift m2_geom_drift_params(const M2Params& p, double omega) {
  M2GeomDrift g;
  const double dl = p.delta;
  const double z4 = (1 - 0.5 * dl) / (1 - dl);
  const double cr = p.c_R * p.R;
  const double a = std::min({omega * std::log(1 + dl), std::log(1 + dl), omega * std::log(z4),
                             std::log(z4), dl * (1 - dl * dl) / (4 * cr * (1 - 0.5 * dl))});
  const double l = p.lambda, t1 = p.theta1, t2 = p.theta2;
  const double zeta1 = (l / (t1 + l)) / (1 - std::exp(-a / omega) * t1 / (t1 + l));
  const double zeta2 = (l / (t2 + l)) / (1 - std::exp(-a) * t2 / (t2 + l));
  const double ea_w = std::exp(a / omega), ea = std::exp(a);
  const double gamma =
      0.5 + 0.5 * std::max({zeta1, zeta2, zeta1 * omega / (1 + omega) * ea_w + zeta2 / (1 + omega),
                            zeta1 * omega / (1 + omega) + zeta2 / (1 + omega) * ea});
  const double K0 = (cr + 1) * std::exp(cr * a);

  g.a = a;
  g.zeta1 = zeta1;
  g.zeta2 = zeta2;
  g.gamma_g = gamma;
  g.x1_g1 = safe_corner(omega / a, K0 / ((omega + 1) * gamma - omega * zeta1 * ea_w - zeta2));
  g.x2_g1 = safe_corner(
      1 / a, (K0 + omega * std::exp(a * (g.x1_g1 + 1) / omega) * (zeta1 * ea_w - gamma)) /
                 (gamma - zeta2));
  g.x2_g2 = safe_corner(1 / a, K0 / ((omega + 1) * gamma - omega * zeta1 - zeta2 * ea));
  g.x1_g2 = safe_corner(omega / a, (K0 + std::exp(a * (g.x2_g2 + 1)) * (zeta2 * ea - gamma)) /
                                       (omega * (gamma - zeta1)));
  const double c1 = std::max({g.x1_g1, g.x1_g2, 0.0});
  const double c2 = std::max({g.x2_g1, g.x2_g2, 0.0});
  g.box_corner = {static_cast<int>(std::floor(c1)), static_cast<int>(std::floor(c2))};

  auto f1 = [a, omega](int x1) { return omega / (omega + 1) * std::exp(a * (x1 + 1) / omega); };
  auto f2 = [a, omega](int x2) { return 1 / (omega + 1) * std::exp(a * (x2 + 1)); };
  g.spec.components = {f1, f2};
  g.spec.V = [f1, f2](const State& x) { return f1(x[0]) + f2(x[1]); };
  g.spec.alpha = 1.0;
  g.spec.beta = 1.0 - gamma;
  g.spec.in_C = [c1, c2](const State& x) { return x[0] <= c1 && x[1] <= c2; };
  // Both terms increase in each coordinate, so the maximum sits at the corner.
  const int X1 = g.box_corner[0], X2 = g.box_corner[1];
  g.spec.b = 2 * omega / (omega + 1) * std::exp(a * (X1 + 2) / omega) +
             2 / (omega + 1) * std::exp(a * (X2 + 2));
  return g;
}

PolyDrift m2_poly_drift_params(const M2Params& p, double omega) {
  PolyDrift d;
  const double l = p.lambda, t1 = p.theta1, t2 = p.theta2;
  const double cr = p.c_R * p.R;
  const double bound1 = (16 * p.c_R * p.c_R * std::pow(p.R, 2) + 101 * cr) * (l + t1) / t1;
  const double bound2 = (16 * p.c_R * p.c_R * std::pow(p.R, 1) + 101 * cr) * (l + t2) / t2;
  const double sw1 = std::sqrt(omega + 1);
  d.spec.beta = std::min({t2 / (2 * (t2 + l) * sw1), (t1 + t2 - l) / ((t1 + t2 + l) * sw1),
                          t2 / (2 * (t2 + l)), t1 / (2 * (t1 + l) * std::sqrt(omega))});
  d.spec.alpha = 0.5;
  auto f1 = [omega](int x1) { return static_cast<double>(x1) * x1 / omega; };
  auto f2 = [](int x2) { return static_cast<double>(x2) * x2; };
  d.spec.components = {f1, f2};
  d.spec.V = [f1, f2](const State& x) { return f1(x[0]) + f2(x[1]); };
  d.spec.in_C = [bound1, bound2](const State& x) { return x[0] <= bound1 && x[1] <= bound2; };
  d.box_corner = {static_cast<int>(std::floor(bound1)), static_cast<int>(std::floor(bound2))};
  const double X1 = d.box_corner[0] + 1.0, X2 = d.box_corner[1] + 1.0;
  d.spec.b = (d.spec.beta + 1) * (X1 * X1 / omega + X2 * X2);
  return d;
}

long double poly_moment_bound(int i, double V_p_at_x, const PolyBoundParams& q) {
  if (i < 1 || i > q.r + 1) throw std::invalid_argument("moment order outside 1..r+1");
  const long double bt = std::min(q.beta_p, 1.0);
  long double phi = 1.0L;
  for (int j = 1; j <= i; ++j) {
    const long double eta = 1.0L - (j - 1) * (1.0L - q.alpha_p);
    long double beta_eta, b_eta;
    if (j == 1) {
      beta_eta = q.beta_p;
      b_eta = q.b_p;
    } else {
      beta_eta = eta * bt;
      b_eta = std::pow(static_cast<long double>(q.b_p), eta) +
              eta * bt *
                  std::max(1.0L, std::pow(bt, (q.alpha_p + eta - 1.0L) / (1.0L - q.alpha_p)));
    }
    phi *= (std::pow(2.0L, j - 1) + (j - 1) * q.alpha_C * b_eta) / beta_eta;
  }
  return i * phi * (V_p_at_x + q.b_p * q.alpha_C);
}

double GeomBoundParams::b_tilde() const {
  return (3 * b_g + 1) / (1 - gamma_g) * (C_size * C_size * max_E_tau);
}
double GeomBoundParams::gamma_tilde() const { return 1.0 - 1.0 / b_tilde(); }
double GeomBoundParams::c() const {
  const double bt = b_tilde();
  return b_g * bt * bt / (bt - 1);
}

double geom_tail_bound(int n, const GeomBoundParams& params) {
  if (!(params.b_tilde() > 1)) throw std::invalid_argument("b_tilde must exceed 1");
  return params.c() * std::pow(params.gamma_tilde(), n);
}

double resolvent_K(const std::function<TransitionDistribution(const State&)>& kernel,
                   const State& x, int n_max) {
  std::map<State, double> dist{{x, 1.0}};
  double K = 0.0;
  double w = 0.25;
  for (int n = 0; n <= n_max; ++n) {
    auto it = dist.find(State(x.dim));
    if (it != dist.end()) K += w * it->second;
    if (n == n_max) break;
    std::map<State, double> next;
    for (const auto& [s, m] : dist)
      for (const auto& [y, pr] : kernel(s).entries) next[y] += m * pr;
    dist.swap(next);
    w *= 0.5;
  }
  return K;
}

long double m2_resolvent_lower_bound(const M2Params& p, double omega,
                                     std::array<int, 2> corner) {
  // P(y, 0) = d1^{z1} d2^{z2} decreases in each coordinate of y, so the box
  // minimum of the one-step term is at the corner.
  State y{corner[0], corner[1]};
  State z = y;
  z[m2_assign(omega, y) == kQueue1 ? 0 : 1] += 1;
  // Routing can put the extra job on either queue; take the smaller value.
  State z_alt = y;
  z_alt[m2_assign(omega, y) == kQueue1 ? 1 : 0] += 1;
  const long double d1 = p.theta1 / (p.theta1 + p.lambda);
  const long double d2 = p.theta2 / (p.theta2 + p.lambda);
  const long double a = std::pow(d1, z[0]) * std::pow(d2, z[1]);
  const long double b = std::pow(d1, z_alt[0]) * std::pow(d2, z_alt[1]);
  return 0.125L * std::min(a, b);
}

std::int64_t hitting_time(const Environment& env, const Policy& policy, const State& x0, Rng& rng,
                          std::int64_t cap) {
  State x = x0;
  std::int64_t n = 0;
  do {
    if (++n > cap) throw SettlingOverflow("settling overflow while sampling a hitting time");
    x = env.step(x, policy(x), rng);
  } while (!x.is_zero());
  return n;
}

HittingStats empirical_hitting_stats(const Environment& env, const Policy& policy, const State& x0,
                                     std::int64_t n_samples, Rng& rng) {
  HittingStats h;
  h.n = n_samples;
  h.samples.resize(static_cast<std::size_t>(n_samples));
  for (auto& s : h.samples) s = hitting_time(env, policy, x0, rng);
  const double n = static_cast<double>(n_samples);
  double m1 = 0, m2 = 0;
  for (auto s : h.samples) {
    m1 += s;
    m2 += static_cast<double>(s) * s;
  }
  h.mean = m1 / n;
  h.second = m2 / n;
  double v1 = 0, v2 = 0;
  for (auto s : h.samples) {
    const double d1 = s - h.mean, d2 = static_cast<double>(s) * s - h.second;
    v1 += d1 * d1;
    v2 += d2 * d2;
  }
  h.mean_se = std::sqrt(v1 / (n - 1) / n);
  h.second_se = std::sqrt(v2 / (n - 1) / n);
  h.tail.assign(50, 0.0);
  for (auto s : h.samples)
    for (int k = 1; k <= 50 && s > k; ++k) h.tail[k - 1] += 1;
  for (double& v : h.tail) v /= n;
  for (std::int64_t T : {100, 1000, 10000}) {
    const std::int64_t blocks = n_samples / T;
    if (blocks == 0) continue;
    double acc = 0.0;
    for (std::int64_t b = 0; b < blocks; ++b)
      acc += static_cast<double>(*std::max_element(h.samples.begin() + b * T,
                                                   h.samples.begin() + (b + 1) * T));
    h.block_sizes.push_back(T);
    h.block_max_mean.push_back(acc / blocks);
  }
  return h;
}

}  // namespace qts
