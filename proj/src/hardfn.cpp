#include "sosp/hardfn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>

#include <json.hpp>

#include "sosp/stationarity.hpp"

namespace sosp {

namespace {

constexpr double kGradLipBound = 7e6;
constexpr double kHessLipBound = 2.8e10;
constexpr double kNoSospGradFloor = 1e-3;
constexpr double kNoSospCurvature = -0.3;

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// g2'(x)/x, bounded continuation through 0.
inline double g2_d1_over_x(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return 12.0 * (a - 1.0) * (a - 1.0);
}

}  // namespace

double g1(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  const double b = 1.0 - a;
  return 16.0 * a * a * b * b * b;
}

double g1_d1(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return sgn(x) * (32.0 * a - 144.0 * a * a + 192.0 * a * a * a - 80.0 * a * a * a * a);
}

double g1_d2(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return 32.0 - 288.0 * a + 576.0 * a * a - 320.0 * a * a * a;
}

double g2(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return 3.0 * a * a * a * a - 8.0 * a * a * a + 6.0 * a * a - 1.0;
}

double g2_d1(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return sgn(x) * 12.0 * a * (a - 1.0) * (a - 1.0);
}

double g2_d2(double x) {
  const double a = std::abs(x);
  if (a >= 1.0) return 0.0;
  return 36.0 * a * a - 48.0 * a + 12.0;
}

double HardInstanceParams::band_halfwidth() const {
  return std::log(static_cast<double>(d)) / std::sqrt(static_cast<double>(d));
}

double HardInstanceParams::declared_nu() const {
  const double er = epsilon * scale_r();
  if (variant == HardVariant::InformationTheoretic) return er;
  const double bw = band_halfwidth();
  return er * std::min(1.0, 16.0 * mu * mu * bw * bw);
}

void HardInstanceParams::validate() const {
  if (d < 1) throw std::invalid_argument("hard instance: d must be positive");
  if (!(epsilon > 0.0) || !(rho > 0.0))
    throw std::invalid_argument("hard instance: epsilon and rho must be positive");
  if (!(mu >= 3.0)) throw std::invalid_argument("hard instance: mu must be at least 3");
  if (v.size() != d) throw std::invalid_argument("hard instance: direction has wrong length");
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("hard instance: direction must be a unit vector");
}

HardInstanceParams make_hard_instance(int d, double epsilon, double rho, double mu,
                                      HardVariant variant, std::uint64_t seed) {
  HardInstanceParams p;
  p.d = d;
  p.epsilon = epsilon;
  p.rho = rho;
  p.mu = mu;
  p.variant = variant;
  p.seed = seed;
  RngStream rng(seed, 0xd12ec7104ull);
  p.v = rng.unit_sphere(d);
  if (mu < 300.0)
    p.warning = "mu below 300: certified smoothness constants assume mu = 300";
  p.validate();
  return p;
}

double h_value(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu) {
  const double u = v.dot(y);
  const double z2 = std::max(0.0, y.squaredNorm() - u * u);
  const double z = std::sqrt(z2);
  return g1(mu * u) * g2(mu * z);
}

Eigen::VectorXd h_grad(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu) {
  const double u = v.dot(y);
  const Eigen::VectorXd w = y - u * v;
  const double z = w.norm();
  const double h1 = g1(mu * u), h2 = g2(mu * z);
  const double h1p = mu * g1_d1(mu * u);
  Eigen::VectorXd g = h1p * h2 * v;
  // h2'(z)/z stays bounded through z = 0, so use it directly on w.
  g += h1 * (mu * mu * g2_d1_over_x(mu * z)) * w;
  return g;
}

Eigen::MatrixXd h_hess(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu) {
  const int d = static_cast<int>(y.size());
  const double u = v.dot(y);
  const Eigen::VectorXd w = y - u * v;
  const double z = w.norm();

  const double h1 = g1(mu * u), h2 = g2(mu * z);
  const double h1p = mu * g1_d1(mu * u), h2p = mu * g2_d1(mu * z);
  const double h1pp = mu * mu * g1_d2(mu * u), h2pp = mu * mu * g2_d2(mu * z);
  const double h2p_over_z = mu * mu * g2_d1_over_x(mu * z);

  Eigen::MatrixXd H = h1pp * h2 * (v * v.transpose());
  H += h1 * h2p_over_z * (Eigen::MatrixXd::Identity(d, d) - v * v.transpose());
  if (z > 0.0) {
    const Eigen::VectorXd wh = w / z;
    H += h1p * h2p * (v * wh.transpose() + wh * v.transpose());
    H += h1 * (h2pp - h2p_over_z) * (wh * wh.transpose());
  }
  return H;
}

Eigen::VectorXd reduce_to_cube(const Eigen::VectorXd& x) {
  Eigen::VectorXd r(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = std::remainder(x[i], M_PI);
  return r;
}

double sf_value(const Eigen::VectorXd& xr, const Eigen::VectorXd& v, double mu) {
  const Eigen::VectorXd y = xr.array().sin();
  return h_value(y, v, mu) + y.squaredNorm();
}

Eigen::VectorXd sf_grad(const Eigen::VectorXd& xr, const Eigen::VectorXd& v, double mu) {
  const Eigen::VectorXd y = xr.array().sin();
  const Eigen::VectorXd c = xr.array().cos();
  Eigen::VectorXd g = h_grad(y, v, mu).cwiseProduct(c);
  g += (2.0 * xr).array().sin().matrix();
  return g;
}

Eigen::MatrixXd sf_hess(const Eigen::VectorXd& xr, const Eigen::VectorXd& v, double mu) {
  const int d = static_cast<int>(xr.size());
  const Eigen::VectorXd y = xr.array().sin();
  const Eigen::VectorXd c = xr.array().cos();
  Eigen::MatrixXd H = c.asDiagonal() * h_hess(y, v, mu) * c.asDiagonal();
  const Eigen::VectorXd hg = h_grad(y, v, mu);
  for (int i = 0; i < d; ++i)
    H(i, i) += -hg[i] * y[i] + 2.0 * std::cos(2.0 * xr[i]);
  return H;
}

namespace {

struct HardEval {
  Eigen::VectorXd x_reduced;  // in [-pi/2, pi/2]^d
  Eigen::VectorXd y;          // sin of reduced coordinates
  bool in_ball = false;
  bool in_band = false;
};

HardEval locate(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  HardEval e;
  e.x_reduced = reduce_to_cube(x / p.scale_r());
  e.y = e.x_reduced.array().sin();
  e.in_ball = e.x_reduced.norm() <= p.ball_radius_scalefree();
  e.in_band = e.in_ball && std::abs(p.v.dot(e.y)) <= p.band_halfwidth();
  return e;
}

}  // namespace

double hard_F(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  const HardEval e = locate(x, p);
  return p.epsilon * p.scale_r() * (h_value(e.y, p.v, p.mu) + e.y.squaredNorm());
}

Eigen::VectorXd hard_F_grad(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  const HardEval e = locate(x, p);
  return p.epsilon * sf_grad(e.x_reduced, p.v, p.mu);
}

Eigen::MatrixXd hard_F_hess(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  const HardEval e = locate(x, p);
  return (p.epsilon / p.scale_r()) * sf_hess(e.x_reduced, p.v, p.mu);
}

double hard_f(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  const HardEval e = locate(x, p);
  const bool erased =
      p.variant == HardVariant::PolynomialQuery ? e.in_band : e.in_ball;
  const double er = p.epsilon * p.scale_r();
  if (erased) return er * e.y.squaredNorm();
  return er * (h_value(e.y, p.v, p.mu) + e.y.squaredNorm());
}

RegionLabel classify(const Eigen::VectorXd& x, const HardInstanceParams& p) {
  const HardEval e = locate(x, p);
  if (!e.in_ball) return RegionLabel::Padding;
  return e.in_band ? RegionLabel::Band : RegionLabel::Ball;
}

bool non_informative(RegionLabel label) { return label != RegionLabel::Ball; }

std::string to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::Band: return "band";
    case RegionLabel::Ball: return "ball";
    case RegionLabel::Padding: return "padding";
  }
  return "unknown";
}

FunctionPairOracle make_hard_oracle(const HardInstanceParams& p) {
  p.validate();
  TruthView truth;
  truth.value = [p](const Eigen::VectorXd& x) { return hard_F(x, p); };
  truth.grad = [p](const Eigen::VectorXd& x) { return hard_F_grad(x, p); };
  truth.hess = [p](const Eigen::VectorXd& x) { return hard_F_hess(x, p); };
  FunctionPairOracle oracle = make_pair(
      p.d, [p](const Eigen::VectorXd& x) { return hard_f(x, p); }, std::move(truth),
      p.declared_nu());
  const double se = std::sqrt(p.rho * p.epsilon);
  oracle.set_regularity({p.epsilon * p.scale_r() * (1.0 + p.d), kGradLipBound * se,
                         kHessLipBound * p.rho});
  return oracle;
}

BandGapReport band_gap_audit(const HardInstanceParams& p, long n_samples,
                             RngStream& rng) {
  BandGapReport rep;
  const double er = p.epsilon * p.scale_r();
  const double bw = p.band_halfwidth();
  rep.bound = er * std::min(1.0, 16.0 * p.mu * p.mu * bw * bw);

  const auto erased = [&p](const Eigen::VectorXd& x) {
    const RegionLabel label = classify(x, p);
    return p.variant == HardVariant::PolynomialQuery ? label == RegionLabel::Band
                                                     : label != RegionLabel::Padding;
  };

  const double ball_r = p.scale_r() * p.ball_radius_scalefree();
  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd x = rng.uniform_ball(p.d, ball_r);
    const double gap = std::abs(hard_f(x, p) - hard_F(x, p));
    if (erased(x)) {
      ++rep.band_samples;
      rep.max_gap_band = std::max(rep.max_gap_band, gap);
    } else {
      ++rep.outside_samples;
      rep.max_gap_outside = std::max(rep.max_gap_outside, gap);
    }
  }
  // Outside the erased region f must coincide with F exactly.
  const double cube_half = p.scale_r() * M_PI / 2.0;
  for (long i = 0; i < n_samples; ++i) {
    Eigen::VectorXd x(p.d);
    for (int k = 0; k < p.d; ++k) x[k] = (2.0 * rng.next_uniform() - 1.0) * cube_half;
    if (erased(x)) continue;
    ++rep.outside_samples;
    rep.max_gap_outside =
        std::max(rep.max_gap_outside, std::abs(hard_f(x, p) - hard_F(x, p)));
  }
  return rep;
}

ConcentrationReport fixed_point_concentration_at(const Eigen::VectorXd& x, long trials,
                                                 RngStream& rng) {
  const int d = static_cast<int>(x.size());
  if (d < 2) throw std::invalid_argument("fixed_point_concentration: d must be >= 2");
  ConcentrationReport rep;
  rep.d = d;
  rep.trials = trials;
  const double logd = std::log(static_cast<double>(d));
  rep.bound = 2.0 * std::exp(-logd * logd / 2.0);

  const Eigen::VectorXd y = x.array().sin();
  const double threshold = logd / std::sqrt(static_cast<double>(d));

  Eigen::VectorXd g(d);
  for (long t = 0; t < trials; ++t) {
    for (int i = 0; i < d; ++i) g[i] = rng.next_gaussian();
    const double inner = std::abs(g.dot(y)) / g.norm();
    if (inner > threshold) ++rep.misses;
  }
  rep.empirical = static_cast<double>(rep.misses) / static_cast<double>(trials);
  const double pb = std::min(1.0, rep.bound);
  rep.slack = 4.0 * std::sqrt(pb * (1.0 - pb) / static_cast<double>(trials));
  return rep;
}

ConcentrationReport fixed_point_concentration(int d, long trials, RngStream& rng) {
  if (d < 2) throw std::invalid_argument("fixed_point_concentration: d must be >= 2");
  // Fixed scale-free ball point (mu = 300 geometry).
  const Eigen::VectorXd x = rng.uniform_ball(d, 3.0 / 300.0);
  return fixed_point_concentration_at(x, trials, rng);
}

SmoothnessAuditReport smoothness_audit(const HardInstanceParams& p, long n_samples,
                                       RngStream& rng) {
  SmoothnessAuditReport rep;
  rep.samples = n_samples;
  const int d = p.d;
  const double fd_h = 1e-6;
  const auto F = [&](const Eigen::VectorXd& xr) { return sf_value(xr, p.v, p.mu); };

  auto cube_point = [&](RngStream& r) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = (2.0 * r.next_uniform() - 1.0) * M_PI / 2.0;
    return x;
  };
  // The bump and its extreme curvature live inside the ball, so alternate
  // between cube and ball samples.
  auto mixed_point = [&](RngStream& r, long i) {
    return i % 2 == 0 ? cube_point(r) : r.uniform_ball(d, 3.0 / p.mu);
  };

  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd x = mixed_point(rng, i);
    const Eigen::VectorXd y = x.array().sin();
    bool bad = false;

    const double fval = std::abs(F(x)) / (1.0 + d);
    rep.max_abs_F_over_bound = std::max(rep.max_abs_F_over_bound, fval);
    bad |= fval > 1.0;

    const double habs = std::abs(h_value(y, p.v, p.mu));
    rep.max_abs_h = std::max(rep.max_abs_h, habs);
    bad |= habs > 1.0;

    const double hg = h_grad(y, p.v, p.mu).norm() / (3.0 * p.mu);
    rep.max_h_grad_over_bound = std::max(rep.max_h_grad_over_bound, hg);
    bad |= hg > 1.0;

    const Eigen::MatrixXd H = finite_diff_hess(F, x, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double hn = es.eigenvalues().cwiseAbs().maxCoeff();
    rep.max_hess_norm = std::max(rep.max_hess_norm, hn);
    bad |= hn > kGradLipBound;

    if (bad) {
      ++rep.violations;
      rep.witnesses.push_back(x);
    }
  }

  // Hessian Lipschitz ratio on independent point pairs from both regions.
  const long pairs = std::max<long>(1, n_samples / 4);
  for (long i = 0; i < pairs; ++i) {
    const Eigen::VectorXd a = mixed_point(rng, i);
    const Eigen::VectorXd b = i % 2 == 0 ? cube_point(rng) : rng.uniform_ball(d, 3.0 / p.mu);
    const double dist = (a - b).norm();
    if (dist < 1e-3) continue;
    const Eigen::MatrixXd Ha = finite_diff_hess(F, a, 1e-4);
    const Eigen::MatrixXd Hb = finite_diff_hess(F, b, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ha - Hb);
    const double ratio = es.eigenvalues().cwiseAbs().maxCoeff() / dist;
    rep.max_hess_lip_ratio = std::max(rep.max_hess_lip_ratio, ratio);
    if (ratio > kHessLipBound) {
      ++rep.violations;
      rep.witnesses.push_back(a);
    }
  }

  // No-stationary-point certificate on the non-informative region: every
  // sample must show a gradient above the floor or strong negative curvature.
  HardInstanceParams sf = p;
  sf.epsilon = 1.0;
  sf.rho = 1.0;
  for (long i = 0; i < n_samples; ++i) {
    Eigen::VectorXd x;
    if (i % 2 == 0) {
      x = rng.uniform_ball(d, 3.0 / p.mu);  // ball (band at practical d)
    } else {
      x = cube_point(rng);  // overwhelmingly padding
    }
    if (!non_informative(classify(x, sf))) continue;
    ++rep.no_sosp_checked;
    const double gn = finite_diff_grad(F, x, fd_h).norm();
    if (gn >= kNoSospGradFloor) continue;
    const Eigen::MatrixXd H = finite_diff_hess(F, x, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.eigenvalues().minCoeff() <= kNoSospCurvature) continue;
    ++rep.no_sosp_violations;
    rep.witnesses.push_back(x);
  }
  return rep;
}

AdaptiveQueryReport adaptive_query_experiment(const OracleOptimizer& run_optimizer,
                                              const HardInstanceParams& base,
                                              long query_budget, int v_draws,
                                              RngStream& rng) {
  AdaptiveQueryReport rep;
  rep.runs = v_draws;
  for (int run = 0; run < v_draws; ++run) {
    RngStream run_rng = rng.substream(run);
    HardInstanceParams p = base;
    p.v = run_rng.substream(1).unit_sphere(base.d);

    AdaptiveQueryRun r;
    // Classification happens on the oracle side of the interface; the
    // optimizer sees values only.
    auto counted_f = [&p, &r](const Eigen::VectorXd& x) {
      ++r.queries;
      if (non_informative(classify(x, p))) ++r.noninformative_queries;
      return hard_f(x, p);
    };
    FunctionPairOracle oracle(p.d, counted_f, p.declared_nu());

    const double ball_r = p.scale_r() * p.ball_radius_scalefree();
    const Eigen::VectorXd x0 = run_rng.substream(2).uniform_ball(p.d, ball_r);
    RngStream opt_rng = run_rng.substream(3);
    const RunRecord rec = run_optimizer(oracle, x0, opt_rng);
    (void)query_budget;

    const Eigen::VectorXd xr = reduce_to_cube(rec.final_iterate() / p.scale_r());
    r.terminal_grad_sf = sf_grad(xr, p.v, p.mu).norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sf_hess(xr, p.v, p.mu));
    r.terminal_min_eig_sf = es.eigenvalues().minCoeff();
    r.certificate_sosp = r.terminal_grad_sf < kNoSospGradFloor &&
                         r.terminal_min_eig_sf > kNoSospCurvature;

    rep.total_queries += r.queries;
    rep.noninformative_queries += r.noninformative_queries;
    if (r.certificate_sosp) ++rep.sosp_successes;
    rep.per_run.push_back(r);
  }
  rep.success_rate = static_cast<double>(rep.sosp_successes) / std::max(1, rep.runs);
  rep.noninformative_fraction = rep.total_queries == 0
                                    ? 1.0
                                    : static_cast<double>(rep.noninformative_queries) /
                                          static_cast<double>(rep.total_queries);
  return rep;
}

std::string direction_commitment(const Eigen::VectorXd& v) {
  // FNV-1a over the canonical little-endian double bits.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double d = v[i];
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  char buf[2 + 16 + 1];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

std::string variant_name(HardVariant v) {
  return v == HardVariant::PolynomialQuery ? "polynomial-query" : "information-theoretic";
}

HardVariant variant_from_name(const std::string& s) {
  if (s == "polynomial-query") return HardVariant::PolynomialQuery;
  if (s == "information-theoretic") return HardVariant::InformationTheoretic;
  throw std::invalid_argument("unknown hard-instance variant: " + s);
}

}  // namespace

void write_instance_descriptor(const HardInstanceParams& p, const std::string& path) {
  nlohmann::json j;
  j["d"] = p.d;
  j["epsilon"] = p.epsilon;
  j["rho"] = p.rho;
  j["mu"] = p.mu;
  j["variant"] = variant_name(p.variant);
  j["v_commitment"] = direction_commitment(p.v);
  j["seed"] = p.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_instance_secret(const HardInstanceParams& p, const std::string& path) {
  nlohmann::json j;
  j["v"] = std::vector<double>(p.v.data(), p.v.data() + p.v.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

HardInstanceParams load_instance(const std::string& descriptor_path,
                                 const std::string& secret_path) {
  std::ifstream din(descriptor_path);
  if (!din) throw std::runtime_error("cannot read " + descriptor_path);
  nlohmann::json j;
  din >> j;

  HardInstanceParams p;
  p.d = j.at("d").get<int>();
  p.epsilon = j.at("epsilon").get<double>();
  p.rho = j.at("rho").get<double>();
  p.mu = j.at("mu").get<double>();
  p.variant = variant_from_name(j.at("variant").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();

  std::ifstream sin(secret_path);
  if (!sin) throw std::runtime_error("cannot read " + secret_path);
  nlohmann::json js;
  sin >> js;
  const auto vv = js.at("v").get<std::vector<double>>();
  p.v = Eigen::Map<const Eigen::VectorXd>(vv.data(), vv.size());

  const std::string commit = j.at("v_commitment").get<std::string>();
  if (commit != direction_commitment(p.v))
    throw std::runtime_error("secret direction does not match the committed hash");
  p.validate();
  return p;
}

}  // namespace sosp
