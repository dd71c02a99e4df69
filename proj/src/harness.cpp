#include "sosp/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "sosp/expsearch.hpp"
#include "sosp/relu.hpp"
#include "sosp/smoothing.hpp"
#include "sosp/stationarity.hpp"

namespace sosp {

namespace {

void require_keys(const nlohmann::json& params, const std::set<std::string>& allowed) {
  for (auto it = params.begin(); it != params.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("unknown experiment parameter: " + it.key());
}

template <typename T>
T param(const nlohmann::json& p, const std::string& key, T fallback) {
  if (p.contains(key)) return p.at(key).get<T>();
  return fallback;
}

class CsvFile {
 public:
  explicit CsvFile(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path);
  }
  void cells(const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out_ << ',';
      out_ << row[i];
    }
    out_ << '\n';
  }
  void row(const std::vector<double>& vals) {
    std::vector<std::string> c;
    c.reserve(vals.size());
    for (double v : vals) c.push_back(format_double(v));
    cells(c);
  }

 private:
  std::ofstream out_;
};

nlohmann::json config_json(const OptimizerConfig& cfg) {
  nlohmann::json j;
  j["eta"] = cfg.eta;
  j["perturb_radius"] = cfg.perturb_radius;
  j["sigma"] = cfg.sigma;
  j["batch"] = cfg.batch;
  j["max_iters"] = cfg.max_iters;
  j["epsilon"] = cfg.epsilon;
  j["ell"] = cfg.ell;
  j["rho"] = cfg.rho;
  j["bound_B"] = cfg.bound_B;
  j["delta"] = cfg.delta;
  j["seed"] = cfg.seed;
  j["schedule_c"] = cfg.schedule_c;
  j["chi"] = cfg.chi;
  j["escape_steps"] = cfg.escape_steps;
  j["escape_drop"] = cfg.escape_drop;
  j["batch_theoretical"] = cfg.batch_theoretical;
  j["iters_theoretical"] = cfg.iters_theoretical;
  return j;
}

nlohmann::json report_json(const StationarityReport& r) {
  nlohmann::json j;
  j["grad_norm"] = r.grad_norm;
  j["min_eig"] = r.min_eig;
  j["eps"] = r.eps;
  j["rho"] = r.rho;
  j["eig_tol"] = r.eig_tol;
  j["verdict"] = r.verdict;
  j["derivatives_finite"] = r.derivatives_finite;
  j["method"] = to_string(r.method);
  return j;
}

void write_trajectory_csv(const std::string& path, const RunRecord& rec,
                          const TruthView* truth) {
  CsvFile csv(path);
  const int d = static_cast<int>(rec.iterates.front().size());
  std::vector<std::string> header = {"step", "x_norm", "grad_est_norm", "perturb_norm"};
  if (d <= 8)
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
  if (truth && truth->value) header.push_back("F_value");
  csv.cells(header);
  for (std::size_t t = 0; t < rec.iterates.size(); ++t) {
    const auto& x = rec.iterates[t];
    std::vector<double> row = {static_cast<double>(t), x.norm(),
                               t == 0 ? 0.0 : rec.steps[t - 1].grad_est_norm,
                               t == 0 ? 0.0 : rec.steps[t - 1].perturb_norm};
    if (d <= 8)
      for (int i = 0; i < d; ++i) row.push_back(x[i]);
    if (truth && truth->value) row.push_back(truth->value(x));
    csv.row(row);
  }
}

struct PairBundle {
  FunctionPairOracle oracle;
  double default_ell, default_rho, default_B;
  Eigen::VectorXd default_x0;
};

PairBundle build_pair(const std::string& name, int d, const nlohmann::json& p,
                      RngStream& rng) {
  if (name == "quadratic") {
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(d, 2.0);
    return {make_quadratic_pair(d), 2.0, 1.0, 4.0, x0};
  }
  if (name == "double-well") {
    const double nu = param(p, "nu", 0.5 * std::pow(0.1, 1.5));
    const double tau = param(p, "tau", 1e-3);
    Eigen::VectorXd x0(d);
    for (int i = 0; i < d; ++i) x0[i] = (2.0 * rng.next_uniform() - 1.0) * 1.5;
    return {make_double_well_pair(d, nu, tau), 27.0, 36.0, 5.0, x0};
  }
  if (name == "hard") {
    const double eps = param(p, "eps", 0.01);
    const double rho = param(p, "rho", 1.0);
    const double mu = param(p, "mu", 300.0);
    const std::string variant = param<std::string>(p, "variant", "polynomial-query");
    HardInstanceParams hp = make_hard_instance(
        d, eps, rho, mu,
        variant == "information-theoretic" ? HardVariant::InformationTheoretic
                                           : HardVariant::PolynomialQuery,
        rng.next_u64());
    const double ball = hp.scale_r() * hp.ball_radius_scalefree();
    Eigen::VectorXd x0 = rng.uniform_ball(d, ball);
    return {make_hard_oracle(hp), 1.0, 1.0, 1.0, x0};
  }
  throw std::invalid_argument("unknown pair: " + name);
}

int run_sgd_kind(const ExperimentSpec& spec, std::uint64_t seed, bool first_order,
                 nlohmann::json& summary, const std::string& csv_path) {
  require_keys(spec.params,
               {"pair", "dim", "eps", "ell", "rho", "B", "delta", "nu", "tau", "mu",
                "variant", "batch", "iters", "eta", "sigma", "perturb_r", "x0"});
  const auto& p = spec.params;
  const int d = param(p, "dim", 2);
  RngStream rng(seed, 0);
  PairBundle pb = build_pair(param<std::string>(p, "pair", "double-well"), d, p, rng);

  const double eps = param(p, "eps", 0.1);
  OptimizerConfig cfg = default_config(
      d, eps, param(p, "ell", pb.default_ell), param(p, "rho", pb.default_rho),
      param(p, "B", pb.default_B), param(p, "delta", 0.1));
  cfg.seed = seed;
  if (p.contains("batch")) cfg.batch = p.at("batch").get<long>();
  if (p.contains("iters")) cfg.max_iters = p.at("iters").get<long>();
  if (p.contains("eta")) cfg.eta = p.at("eta").get<double>();
  if (p.contains("sigma")) cfg.sigma = p.at("sigma").get<double>();
  if (p.contains("perturb_r")) cfg.perturb_radius = p.at("perturb_r").get<double>();

  Eigen::VectorXd x0 = pb.default_x0;
  if (p.contains("x0")) {
    const auto v = p.at("x0").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != d)
      throw std::invalid_argument("x0 length does not match dim");
    x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), d);
  }

  RngStream opt_rng(seed, 1);
  RunRecord rec = first_order ? fpsgd(pb.oracle, x0, cfg, opt_rng)
                              : zpsgd(pb.oracle, x0, cfg, opt_rng);

  const TruthView* truth = pb.oracle.has_truth() ? &pb.oracle.truth() : nullptr;
  if (truth) rec.terminal = check_sosp(*truth, rec.final_iterate(), eps, cfg.rho);
  write_trajectory_csv(csv_path, rec, truth);

  summary["resolved_config"] = config_json(cfg);
  summary["queries_used"] = rec.queries_used;
  summary["steps_taken"] = rec.steps_taken();
  if (d <= 16) {
    const auto& xf = rec.final_iterate();
    summary["final_point"] = std::vector<double>(xf.data(), xf.data() + xf.size());
  }
  if (rec.terminal) summary["terminal"] = report_json(*rec.terminal);
  return 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["params"] = params;
  j["seed"] = seed;
  j["output_path"] = output_path;
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.params = j.value("params", nlohmann::json::object());
  s.seed = j.value("seed", std::uint64_t{0});
  s.output_path = j.value("output_path", std::string{"experiment"});
  return s;
}

ExperimentSpec ExperimentSpec::from_summary(const nlohmann::json& summary) {
  return from_json(summary.at("spec"));
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "zpsgd-run",     "fpsgd-run", "psgd-run",      "hard-instance",
      "relu-recovery", "relu-gap",  "concentration", "exp-search",
      "smoothing-audit", "landscape-grid"};
  return kinds;
}

FunctionPairOracle make_quadratic_pair(int d) {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  TruthView truth;
  truth.value = f;
  truth.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
  truth.hess = [d](const Eigen::VectorXd&) {
    return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
  };
  FunctionPairOracle o = make_pair(d, f, std::move(truth), 0.0);
  o.set_grad([](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); });
  o.set_regularity({std::numeric_limits<double>::quiet_NaN(), 2.0, 1e-12});
  return o;
}

double double_well_value(const Eigen::VectorXd& x) {
  const double a = x[0] * x[0] - 1.0;
  return a * a + x.tail(x.size() - 1).squaredNorm();
}

FunctionPairOracle make_double_well_pair(int d, double nu, double tau) {
  if (d < 2) throw std::invalid_argument("double-well pair needs d >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("double-well pair: tau must be positive");
  const double amp = nu / d;  // per-coordinate ripple weight; sup |ripple| = nu

  auto F = [](const Eigen::VectorXd& x) { return double_well_value(x); };
  auto Fg = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = 2.0 * x;
    g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
    return g;
  };
  auto Fh = [d](const Eigen::VectorXd& x) {
    Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(d, d);
    H(0, 0) = 12.0 * x[0] * x[0] - 4.0;
    return H;
  };
  auto f = [F, amp, tau](const Eigen::VectorXd& x) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) r += std::cos(x[i] / tau);
    return F(x) + amp * r;
  };
  auto fg = [Fg, amp, tau](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Fg(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] -= (amp / tau) * std::sin(x[i] / tau);
    return g;
  };

  TruthView truth;
  truth.value = F;
  truth.grad = Fg;
  truth.hess = Fh;
  FunctionPairOracle o = make_pair(d, f, std::move(truth), nu);
  o.set_grad(fg);
  o.set_regularity({5.0, 27.0, 36.0});
  return o;
}

FunctionPairOracle make_quartic_ripple_pair(double nu, double tau, double phase) {
  if (!(tau > 0.0)) throw std::invalid_argument("quartic pair: tau must be positive");
  auto F = [](const Eigen::VectorXd& x) {
    const double a = x[0] * x[0] - 1.0;
    return a * a;
  };
  TruthView truth;
  truth.value = F;
  truth.grad = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, 4.0 * x[0] * (x[0] * x[0] - 1.0)));
  };
  truth.hess = [](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, 12.0 * x[0] * x[0] - 4.0));
  };
  auto f = [F, nu, tau, phase](const Eigen::VectorXd& x) {
    return F(x) + nu * std::cos(x[0] / tau + phase);
  };
  return make_pair(1, f, std::move(truth), nu);
}

SaddleEscapeReport saddle_escape_experiment(double eps, double rho, double c,
                                            double neg_curv, int seeds,
                                            std::uint64_t seed) {
  SaddleEscapeReport rep;
  rep.seeds = seeds;

  OptimizerConfig cfg = default_config(2, eps, 1.0, rho, 1.0, 0.1, c);
  cfg.batch = 1;
  rep.steps = static_cast<long>(std::ceil(cfg.escape_steps));
  rep.required_drop = cfg.escape_drop;
  cfg.max_iters = rep.steps;

  auto f = [neg_curv](const Eigen::VectorXd& x) {
    return 0.5 * (x[0] * x[0] - neg_curv * x[1] * x[1]);
  };
  GradSampler sampler = [neg_curv](const Eigen::VectorXd& x, RngStream&) {
    Eigen::VectorXd g(2);
    g << x[0], -neg_curv * x[1];
    return g;
  };

  Eigen::VectorXd x0(2);
  x0 << 1e-6, 0.0;
  const double f0 = f(x0);
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(seed, static_cast<std::uint64_t>(s));
    const RunRecord rec = psgd(sampler, x0, cfg, rng);
    double best = 0.0;
    for (const auto& x : rec.iterates) best = std::min(best, f(x) - f0);
    rep.best_drop.push_back(best);
    if (best <= -rep.required_drop) ++rep.successes;
  }
  return rep;
}

DoubleWellCompareReport double_well_compare(const DoubleWellCompareOptions& opt,
                                            std::uint64_t seed) {
  DoubleWellCompareReport rep;
  rep.runs = opt.runs;

  for (int run = 0; run < opt.runs; ++run) {
    RngStream rng(seed, static_cast<std::uint64_t>(run));
    Eigen::VectorXd x0(2);
    x0 << (2.0 * rng.next_uniform() - 1.0) * 1.5, (2.0 * rng.next_uniform() - 1.0) * 1.5;

    FunctionPairOracle pair = make_double_well_pair(2, opt.nu, opt.tau);
    OptimizerConfig cfg = default_config(2, opt.eps, 27.0, 36.0, 5.0, 0.1);
    cfg.batch = opt.zpsgd_batch;
    cfg.max_iters = opt.zpsgd_iters;
    RngStream zr = rng.substream(1);
    const RunRecord zrec = zpsgd(pair, x0, cfg, zr);
    const auto zrep = check_sosp(pair.truth(), zrec.final_iterate(), opt.eps, 36.0);
    rep.zpsgd_grad_norms.push_back(zrep.grad_norm);
    if (zrep.verdict) ++rep.zpsgd_pass;

    FunctionPairOracle gd_pair = make_double_well_pair(2, opt.nu, opt.tau);
    const RunRecord grec = gd_baseline(gd_pair, x0, opt.gd_eta, opt.gd_iters);
    const auto grep = check_sosp(gd_pair.truth(), grec.final_iterate(), opt.eps, 36.0);
    rep.gd_grad_norms.push_back(grep.grad_norm);
    if (grep.verdict) ++rep.gd_pass;
  }
  return rep;
}

void emit_landscape_grid(FunctionPairOracle& pair, double lo, double hi, int n,
                         const std::string& csv_path) {
  if (pair.dim() != 2)
    throw std::invalid_argument("emit_landscape_grid: a 2-d pair (or slice) is required");
  if (n < 2) throw std::invalid_argument("emit_landscape_grid: n must be at least 2");
  CsvFile csv(csv_path);
  csv.cells({"x1", "x2", "F", "f"});
  const auto& truth = pair.truth();
  Eigen::VectorXd x(2);
  for (int i = 0; i < n; ++i) {
    x[0] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    for (int j = 0; j < n; ++j) {
      x[1] = lo + (hi - lo) * static_cast<double>(j) / (n - 1);
      csv.row({x[0], x[1], truth.value(x), pair.value(x)});
    }
  }
}

namespace {

int dispatch(const ExperimentSpec& spec, std::uint64_t seed, nlohmann::json& summary,
             std::vector<std::string>& artifacts) {
  const std::string csv_path = spec.output_path + ".csv";
  const auto& p = spec.params;

  if (spec.kind == "zpsgd-run" || spec.kind == "fpsgd-run") {
    artifacts.push_back(csv_path);
    return run_sgd_kind(spec, seed, spec.kind == "fpsgd-run", summary, csv_path);
  }

  if (spec.kind == "psgd-run") {
    require_keys(p, {"eps", "rho", "c", "neg_curv", "seeds"});
    const auto rep = saddle_escape_experiment(
        param(p, "eps", 0.1), param(p, "rho", 0.1), param(p, "c", 3.0),
        param(p, "neg_curv", 0.1), param(p, "seeds", 20), seed);
    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    csv.cells({"seed", "best_drop", "required_drop"});
    for (int s = 0; s < rep.seeds; ++s)
      csv.row({static_cast<double>(s), rep.best_drop[s], rep.required_drop});
    summary["seeds"] = rep.seeds;
    summary["successes"] = rep.successes;
    summary["required_drop"] = rep.required_drop;
    summary["escape_steps"] = rep.steps;
    return 0;
  }

  if (spec.kind == "hard-instance") {
    require_keys(p, {"d", "eps", "rho", "mu", "variant", "audit", "samples"});
    const int d = param(p, "d", 4);
    const std::string variant = param<std::string>(p, "variant", "polynomial-query");
    HardInstanceParams hp = make_hard_instance(
        d, param(p, "eps", 1.0), param(p, "rho", 1.0), param(p, "mu", 300.0),
        variant == "information-theoretic" ? HardVariant::InformationTheoretic
                                           : HardVariant::PolynomialQuery,
        seed);
    if (!hp.warning.empty()) summary["warning"] = hp.warning;
    const std::string desc = spec.output_path + ".instance.json";
    const std::string secret = spec.output_path + ".secret.json";
    write_instance_descriptor(hp, desc);
    write_instance_secret(hp, secret);
    artifacts.push_back(desc);
    artifacts.push_back(secret);
    summary["v_commitment"] = direction_commitment(hp.v);
    summary["declared_nu"] = hp.declared_nu();

    if (param(p, "audit", false)) {
      const long samples = param(p, "samples", 1000L);
      RngStream rng(seed, 7);
      const auto smooth = smoothness_audit(hp, samples, rng);
      const auto gap = band_gap_audit(hp, 10 * samples, rng);
      nlohmann::json ja;
      ja["samples"] = smooth.samples;
      ja["max_abs_F_over_bound"] = smooth.max_abs_F_over_bound;
      ja["max_abs_h"] = smooth.max_abs_h;
      ja["max_h_grad_over_bound"] = smooth.max_h_grad_over_bound;
      ja["max_hess_norm"] = smooth.max_hess_norm;
      ja["max_hess_lip_ratio"] = smooth.max_hess_lip_ratio;
      ja["no_sosp_checked"] = smooth.no_sosp_checked;
      ja["no_sosp_violations"] = smooth.no_sosp_violations;
      ja["violations"] = smooth.violations;
      summary["smoothness_audit"] = ja;
      nlohmann::json jg;
      jg["band_samples"] = gap.band_samples;
      jg["max_gap_band"] = gap.max_gap_band;
      jg["bound"] = gap.bound;
      jg["outside_samples"] = gap.outside_samples;
      jg["max_gap_outside"] = gap.max_gap_outside;
      summary["band_gap_audit"] = jg;
      CsvFile csv(csv_path);
      artifacts.push_back(csv_path);
      csv.cells({"metric", "value", "bound"});
      csv.cells({"abs_F_over_bound", format_double(smooth.max_abs_F_over_bound), "1"});
      csv.cells({"abs_h", format_double(smooth.max_abs_h), "1"});
      csv.cells({"hess_norm", format_double(smooth.max_hess_norm), "7e6"});
      csv.cells({"hess_lip_ratio", format_double(smooth.max_hess_lip_ratio), "2.8e10"});
      csv.cells({"band_gap", format_double(gap.max_gap_band), format_double(gap.bound)});
    }
    return 0;
  }

  if (spec.kind == "relu-recovery") {
    require_keys(p, {"d", "n", "eps", "trials", "iters", "batch", "ell_scale", "delta",
                     "control"});
    RecoveryOptions opt;
    opt.iters = param(p, "iters", 150L);
    opt.batch = param(p, "batch", 400L);
    opt.ell_scale = param(p, "ell_scale", 2.0);
    opt.delta = param(p, "delta", 0.1);
    opt.population_control = param(p, "control", false);
    RngStream rng(seed, 0);
    const auto rep = relu_recovery_experiment(param(p, "d", 2), param(p, "n", 10000L),
                                              param(p, "eps", 0.2),
                                              param(p, "trials", 20), opt, rng);
    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    csv.cells({"trial", "final_dist"});
    for (std::size_t i = 0; i < rep.final_dist.size(); ++i)
      csv.row({static_cast<double>(i), rep.final_dist[i]});
    summary["trials"] = rep.trials;
    summary["successes"] = rep.successes;
    summary["success_rate"] = rep.success_rate;
    summary["containment"] = rep.containment;
    return 0;
  }

  if (spec.kind == "relu-gap") {
    require_keys(p, {"d", "n_list", "trials", "grid"});
    RngStream rng(seed, 0);
    const auto rep = uniform_gap_experiment(
        param(p, "d", 5), param(p, "n_list", std::vector<long>{100, 1000, 10000}),
        param(p, "trials", 20), param(p, "grid", 256), rng);
    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    csv.cells({"n", "mean_sup_gap"});
    for (const auto& row : rep.rows)
      csv.row({static_cast<double>(row.n), row.mean_sup_gap});
    summary["d"] = rep.d;
    summary["trials"] = rep.trials;
    summary["grid_size"] = rep.grid_size;
    summary["loglog_slope"] = rep.loglog_slope;
    return 0;
  }

  if (spec.kind == "concentration") {
    require_keys(p, {"d", "trials"});
    RngStream rng(seed, 0);
    const auto rep =
        fixed_point_concentration(param(p, "d", 100), param(p, "trials", 1000000L), rng);
    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    csv.cells({"d", "trials", "misses", "empirical", "bound", "slack"});
    csv.row({static_cast<double>(rep.d), static_cast<double>(rep.trials),
             static_cast<double>(rep.misses), rep.empirical, rep.bound, rep.slack});
    summary["d"] = rep.d;
    summary["trials"] = rep.trials;
    summary["misses"] = rep.misses;
    summary["empirical"] = rep.empirical;
    summary["bound"] = rep.bound;
    summary["slack"] = rep.slack;
    summary["ok"] = rep.ok();
    return 0;
  }

  if (spec.kind == "exp-search") {
    require_keys(p, {"pair", "dim", "eps", "nu", "tau", "ell", "rho", "B",
                     "cover_radius", "c_prime", "kappa", "probe_radius", "cover_cap",
                     "enumeration"});
    const std::string pair_name = param<std::string>(p, "pair", "double-well");
    const int d = param(p, "dim", pair_name == "quartic-ripple" ? 1 : 2);
    RngStream rng(seed, 0);

    FunctionPairOracle pair = [&]() -> FunctionPairOracle {
      if (pair_name == "quartic-ripple")
        return make_quartic_ripple_pair(param(p, "nu", 1e-4), param(p, "tau", 0.02),
                                        2.0 * M_PI * rng.next_uniform());
      if (pair_name == "double-well")
        return make_double_well_pair(d, param(p, "nu", 2e-5), param(p, "tau", 1e-3));
      if (pair_name == "quadratic") return make_quadratic_pair(d);
      throw std::invalid_argument("exp-search: unknown pair " + pair_name);
    }();

    SearchOptions opts;
    opts.cover_radius = param(p, "cover_radius", 1.6);
    opts.c_prime = param(p, "c_prime", 0.5);
    opts.kappa = param(p, "kappa", 6.0);
    opts.cover_cap = param(p, "cover_cap", 50'000'000L);
    opts.pure_enumeration = param(p, "enumeration", false);
    if (p.contains("probe_radius")) opts.probe_radius = p.at("probe_radius").get<double>();

    const double eps = param(p, "eps", 0.05);
    const double ell = param(p, "ell", d == 1 ? 44.0 : 44.0);
    const double rho = param(p, "rho", d == 1 ? 24.0 : 48.0);
    const auto res = exhaustive_sosp_search(pair, d, eps, ell, rho, param(p, "B", 2.0),
                                            param(p, "nu", 1e-4), opts);

    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    std::vector<std::string> header = {"index", "probes"};
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
    csv.cells(header);
    std::vector<double> row = {static_cast<double>(res.index),
                               static_cast<double>(res.probes_run)};
    for (int i = 0; i < d; ++i) row.push_back(res.x[i]);
    csv.row(row);

    summary["index"] = res.index;
    summary["probes_run"] = res.probes_run;
    summary["accept_grad"] = res.accept_grad;
    summary["accept_min_eig"] = res.accept_min_eig;
    summary["in_guarantee_regime"] = res.in_guarantee_regime;
    summary["point"] = std::vector<double>(res.x.data(), res.x.data() + res.x.size());
    summary["fit_grad_norm"] = res.fit.g.norm();
    summary["verified"] =
        report_json(check_sosp(pair.truth(), res.x, 2.0 * eps, rho));
    return 0;
  }

  if (spec.kind == "smoothing-audit") {
    require_keys(p, {"pair", "dim", "sigma", "points", "inner", "nu", "tau", "eps",
                     "rho", "domain_radius"});
    const std::string pair_name = param<std::string>(p, "pair", "cos");
    RngStream rng(seed, 0);
    double nu = param(p, "nu", 0.1);
    double rho = param(p, "rho", 0.0);
    double domain = param(p, "domain_radius", 2.0);
    const double sigma = param(p, "sigma", 0.5);

    FunctionPairOracle pair = [&]() -> FunctionPairOracle {
      if (pair_name == "cos") {
        const double tau = param(p, "tau", sigma / 4.0);
        const int d = param(p, "dim", 1);
        auto F = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
        TruthView truth;
        truth.value = F;
        truth.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
        truth.hess = [d](const Eigen::VectorXd&) {
          return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
        };
        auto f = [F, nu, tau](const Eigen::VectorXd& x) {
          return F(x) + nu * std::cos(x[0] / tau);
        };
        return make_pair(d, f, std::move(truth), nu);
      }
      if (pair_name == "hard") {
        const int d = param(p, "dim", 4);
        HardInstanceParams hp =
            make_hard_instance(d, param(p, "eps", 1.0), param(p, "rho", 1.0),
                               param(p, "mu", 300.0), HardVariant::PolynomialQuery,
                               rng.next_u64());
        FunctionPairOracle o = make_hard_oracle(hp);
        nu = o.nu();
        rho = o.regularity().rho;
        domain = hp.scale_r() * M_PI / 2.0;
        return o;
      }
      throw std::invalid_argument("smoothing-audit: unknown pair " + pair_name);
    }();

    const auto rep = verify_smoothing_bounds(pair, nu, rho, sigma,
                                             param(p, "points", 100),
                                             param(p, "inner", 1000000L), domain, rng);
    CsvFile csv(csv_path);
    artifacts.push_back(csv_path);
    csv.cells({"max_grad_dev", "grad_bound", "max_hess_dev", "hess_bound",
               "grad_violations", "hess_violations"});
    csv.row({rep.max_grad_dev, rep.grad_bound, rep.max_hess_dev, rep.hess_bound,
             static_cast<double>(rep.grad_violations),
             static_cast<double>(rep.hess_violations)});
    summary["sigma"] = rep.sigma;
    summary["nu"] = rep.nu;
    summary["rho"] = rep.rho;
    summary["points"] = rep.points;
    summary["inner_samples"] = rep.inner_samples;
    summary["max_grad_dev"] = rep.max_grad_dev;
    summary["grad_bound"] = rep.grad_bound;
    summary["max_hess_dev"] = rep.max_hess_dev;
    summary["hess_bound"] = rep.hess_bound;
    summary["grad_violations"] = rep.grad_violations;
    summary["hess_violations"] = rep.hess_violations;
    summary["ok"] = rep.ok();
    return 0;
  }

  if (spec.kind == "landscape-grid") {
    require_keys(p, {"pair", "lo", "hi", "n", "nu", "tau", "mu", "eps", "rho",
                     "relu_n", "variant"});
    const std::string pair_name = param<std::string>(p, "pair", "double-well");
    const double lo = param(p, "lo", -1.5), hi = param(p, "hi", 1.5);
    const int n = param(p, "n", 81);
    RngStream rng(seed, 0);

    if (pair_name == "relu") {
      Eigen::VectorXd w_star(2);
      w_star << 1.0, 0.0;
      auto inst = std::make_shared<const ReluInstance>(
          make_relu_instance(2, param(p, "relu_n", 40L), w_star, seed));
      FunctionPairOracle pair = make_relu_oracle(inst);
      emit_landscape_grid(pair, param(p, "lo", 0.1), param(p, "hi", 2.0), n, csv_path);
    } else if (pair_name == "hard") {
      HardInstanceParams hp =
          make_hard_instance(2, param(p, "eps", 1.0), param(p, "rho", 1.0),
                             param(p, "mu", 10.0), HardVariant::PolynomialQuery, seed);
      if (!hp.warning.empty()) summary["warning"] = hp.warning;
      FunctionPairOracle pair = make_hard_oracle(hp);
      emit_landscape_grid(pair, lo, hi, n, csv_path);
    } else if (pair_name == "double-well") {
      FunctionPairOracle pair =
          make_double_well_pair(2, param(p, "nu", 0.0158), param(p, "tau", 1e-3));
      emit_landscape_grid(pair, lo, hi, n, csv_path);
    } else if (pair_name == "quadratic") {
      FunctionPairOracle pair = make_quadratic_pair(2);
      emit_landscape_grid(pair, lo, hi, n, csv_path);
    } else {
      throw std::invalid_argument("landscape-grid: unknown pair " + pair_name);
    }
    artifacts.push_back(csv_path);
    summary["grid_n"] = n;
    return 0;
  }

  throw std::invalid_argument("unknown experiment kind: " + spec.kind);
}

}  // namespace

int run(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t seed = spec.seed;
  if (const char* env = std::getenv("SEED")) seed = std::strtoull(env, nullptr, 10);

  nlohmann::json summary;
  std::vector<std::string> artifacts;
  ExperimentSpec resolved = spec;
  resolved.seed = seed;
  summary["spec"] = resolved.to_json();

  try {
    const int status = dispatch(spec, seed, summary, artifacts);
    const std::string summary_path = spec.output_path + ".summary.json";
    write_json_file(summary_path, summary);
    artifacts.push_back(summary_path);

    nlohmann::json meta;
    meta["tool"] = "sosp";
    meta["version"] = "0.1.0";
    meta["wall_time_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    meta["artifacts"] = artifacts;
    write_json_file(spec.output_path + ".meta.json", meta);
    return status;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["kind"] = spec.kind;
    write_json_file(spec.output_path + ".error.json", err);
    return 1;
  }
}

}  // namespace sosp
