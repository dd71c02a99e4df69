#include "sosp/relu.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>

#include <json.hpp>

#include "sosp/hardfn.hpp"
#include "sosp/optim.hpp"

namespace sosp {

namespace {

constexpr double kOnePointConstant = 0.1;

struct Angle {
  double theta = 0.0, sin_t = 0.0, cos_t = 1.0;
  Eigen::VectorXd w_hat;  // unit w
  Eigen::VectorXd u_hat;  // unit vector along w_star - w_hat cos t (empty at t ~ 0)
};

Angle angle_to_target(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  const double wn = w.norm();
  if (!(wn > 0.0)) throw std::invalid_argument("relu: w = 0 is outside the smooth domain");
  Angle a;
  a.w_hat = w / wn;
  a.cos_t = a.w_hat.dot(w_star);
  const Eigen::VectorXd o = w_star - a.cos_t * a.w_hat;
  a.sin_t = o.norm();
  a.theta = std::atan2(a.sin_t, a.cos_t);
  if (a.sin_t > 1e-14) a.u_hat = o / a.sin_t;
  return a;
}

}  // namespace

ReluInstance make_relu_instance(int d, long n, const Eigen::VectorXd& w_star,
                                std::uint64_t seed) {
  if (d <= 0 || n <= 0) throw std::invalid_argument("relu instance: d and n must be positive");
  if (w_star.size() != d || std::abs(w_star.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("relu instance: w_star must be a unit vector of length d");
  ReluInstance inst;
  inst.d = d;
  inst.n = n;
  inst.w_star = w_star;
  inst.seed = seed;
  RngStream rng(seed, 0x4e1a);
  inst.X.resize(n, d);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) inst.X(i, j) = rng.next_gaussian();
  inst.y = (inst.X * w_star).cwiseMax(0.0);
  for (long i = 0; i < n; ++i) inst.y[i] += rng.next_gaussian();
  return inst;
}

double empirical_risk(const ReluInstance& inst, const Eigen::VectorXd& w) {
  const Eigen::VectorXd pred = (inst.X * w).cwiseMax(0.0);
  return (inst.y - pred).squaredNorm() / (2.0 * static_cast<double>(inst.n));
}

Eigen::VectorXd empirical_risk_grad(const ReluInstance& inst, const Eigen::VectorXd& w) {
  const Eigen::VectorXd a = inst.X * w;
  // relu'(0) takes the zero branch, so only strictly active rows contribute.
  Eigen::VectorXd r(inst.n);
  for (long i = 0; i < inst.n; ++i)
    r[i] = a[i] > 0.0 ? a[i] - inst.y[i] : 0.0;
  return inst.X.transpose() * r / static_cast<double>(inst.n);
}

Eigen::VectorXd empirical_risk_batch(const ReluInstance& inst,
                                     const Eigen::Ref<const Eigen::MatrixXd>& W) {
  const Eigen::Index m = W.cols();
  Eigen::VectorXd out(m);
  const double scale = 1.0 / (2.0 * static_cast<double>(inst.n));
  // One column at a time keeps the activation buffer in cache.
  Eigen::VectorXd a(inst.n);
  for (Eigen::Index j = 0; j < m; ++j) {
    a.noalias() = inst.X * W.col(j);
    out[j] = (inst.y.array() - a.array().max(0.0)).square().sum() * scale;
  }
  return out;
}

double arc_cosine_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double un = u.norm(), vn = v.norm();
  if (!(un > 0.0) || !(vn > 0.0))
    throw std::invalid_argument("arc_cosine_kernel: zero vector");
  const double c = u.dot(v) / (un * vn);
  const Eigen::VectorXd o = v / vn - c * (u / un);
  const double s = o.norm();
  const double theta = std::atan2(s, c);
  return un * vn * (s + (M_PI - theta) * c) / (2.0 * M_PI);
}

double population_risk(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  const Angle a = angle_to_target(w, w_star);
  const double wn = w.norm();
  return 0.25 * wn * wn + 1.25 -
         wn * (a.sin_t + (M_PI - a.theta) * a.cos_t) / (2.0 * M_PI);
}

double empirical_risk_expectation(const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& w_star) {
  return population_risk(w, w_star) - 0.5;
}

Eigen::VectorXd population_grad(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  const Angle a = angle_to_target(w, w_star);
  return 0.5 * (w - w_star) + (a.theta * w_star - a.sin_t * a.w_hat) / (2.0 * M_PI);
}

Eigen::MatrixXd population_hess(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  const int d = static_cast<int>(w.size());
  const Angle a = angle_to_target(w, w_star);
  Eigen::MatrixXd H = 0.5 * Eigen::MatrixXd::Identity(d, d);
  if (a.u_hat.size() == 0) return H;  // aligned with the target: exact half identity
  const double coef = a.sin_t / (2.0 * M_PI * w.norm());
  H -= coef * (Eigen::MatrixXd::Identity(d, d) + a.u_hat * a.u_hat.transpose() -
               a.w_hat * a.w_hat.transpose());
  return H;
}

bool in_region(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  const double d = static_cast<double>(w.size());
  return w.dot(w_star) >= 1.0 / std::sqrt(d) && w.norm() <= 2.0;
}

Eigen::VectorXd sample_region(const Eigen::VectorXd& w_star, RngStream& rng) {
  const int d = static_cast<int>(w_star.size());
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Eigen::VectorXd w = rng.uniform_ball(d, 2.0);
    if (in_region(w, w_star)) return w;
  }
  throw std::runtime_error("sample_region: rejection sampling failed");
}

FunctionPairOracle make_relu_oracle(std::shared_ptr<const ReluInstance> inst) {
  if (!inst) throw std::invalid_argument("make_relu_oracle: null instance");
  const ReluInstance& ref = *inst;

  double nu = 0.0;
  if (ref.has_target()) {
    // Measured closeness bound over the region, with headroom.
    RngStream rng(ref.seed, 0x4e1b);
    double sup = 0.0;
    for (int i = 0; i < 256; ++i) {
      const Eigen::VectorXd w = sample_region(ref.w_star, rng);
      sup = std::max(sup, std::abs(empirical_risk(ref, w) -
                                   empirical_risk_expectation(w, ref.w_star)));
    }
    nu = 1.5 * sup + 1e-6;
  }

  FunctionPairOracle oracle(
      ref.d, [inst](const Eigen::VectorXd& w) { return empirical_risk(*inst, w); }, nu);
  oracle.set_batch([inst](const Eigen::Ref<const Eigen::MatrixXd>& W) {
    return empirical_risk_batch(*inst, W);
  });
  oracle.set_grad(
      [inst](const Eigen::VectorXd& w) { return empirical_risk_grad(*inst, w); });
  if (ref.has_target()) {
    const Eigen::VectorXd ws = ref.w_star;
    TruthView truth;
    truth.value = [ws](const Eigen::VectorXd& w) {
      return empirical_risk_expectation(w, ws);
    };
    truth.grad = [ws](const Eigen::VectorXd& w) { return population_grad(w, ws); };
    truth.hess = [ws](const Eigen::VectorXd& w) { return population_hess(w, ws); };
    oracle.set_truth(std::move(truth));
    const double sd = std::sqrt(static_cast<double>(ref.d));
    oracle.set_regularity({1.0, 2.0 * sd, static_cast<double>(ref.d)});
  }
  return oracle;
}

OnePointConvexityReport one_point_convexity_audit(const Eigen::VectorXd& w_star,
                                                  long n_samples, RngStream& rng) {
  OnePointConvexityReport rep;
  rep.samples = n_samples;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd w = sample_region(w_star, rng);
    const Eigen::VectorXd g = population_grad(w, w_star);
    const double lhs = (-g).dot(w_star - w);
    const double margin = lhs - kOnePointConstant * (w - w_star).squaredNorm();
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.witness = w;
    }
    if (margin < -1e-12) ++rep.violations;
  }
  return rep;
}

UniformGapReport uniform_gap_experiment(int d, const std::vector<long>& n_list,
                                        int trials, int grid_size, RngStream& rng) {
  UniformGapReport rep;
  rep.d = d;
  rep.trials = trials;
  rep.grid_size = grid_size;

  RngStream grid_rng = rng.substream(0);
  const Eigen::VectorXd w_star = grid_rng.unit_sphere(d);
  Eigen::MatrixXd grid(d, grid_size);
  Eigen::VectorXd expected(grid_size);
  for (int j = 0; j < grid_size; ++j) {
    grid.col(j) = sample_region(w_star, grid_rng);
    expected[j] = empirical_risk_expectation(grid.col(j), w_star);
  }

  std::uint64_t dataset = 0;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const long n = n_list[k];
    double mean = 0.0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t sub = rng.substream(1 + dataset++).next_u64();
      const ReluInstance inst = make_relu_instance(d, n, w_star, sub);
      const Eigen::VectorXd risks = empirical_risk_batch(inst, grid);
      mean += (risks - expected).cwiseAbs().maxCoeff();
    }
    rep.rows.push_back({n, mean / trials});
  }

  // Least-squares slope of log(gap) against log(n).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(rep.rows.size());
  for (const auto& row : rep.rows) {
    const double lx = std::log(static_cast<double>(row.n));
    const double ly = std::log(row.mean_sup_gap);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  rep.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

RecoveryReport relu_recovery_experiment(int d, long n, double eps, int trials,
                                        const RecoveryOptions& opt, RngStream& rng) {
  RecoveryReport rep;
  rep.trials = trials;
  long in_region_steps = 0, total_steps = 0;

  for (int t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.substream(t);
    const Eigen::VectorXd w_star = trial_rng.substream(0).unit_sphere(d);

    OptimizerConfig cfg =
        default_config(d, eps, opt.ell_scale * std::sqrt(static_cast<double>(d)),
                       static_cast<double>(d), 1.0, opt.delta);
    cfg.batch = opt.batch;
    cfg.max_iters = opt.iters;
    if (opt.sigma_override > 0.0) cfg.sigma = opt.sigma_override;

    // Start from a Gaussian init, redrawn until it lands in the region.
    RngStream init_rng = trial_rng.substream(1);
    Eigen::VectorXd w0;
    do {
      w0 = init_rng.gaussian_vector(d, 1.0 / std::sqrt(static_cast<double>(d)));
    } while (!in_region(w0, w_star));

    RunRecord rec;
    RngStream opt_rng = trial_rng.substream(2);
    if (opt.population_control) {
      FunctionPairOracle oracle(
          d, [w_star](const Eigen::VectorXd& w) { return population_risk(w, w_star); },
          0.0);
      rec = zpsgd(oracle, w0, cfg, opt_rng);
    } else {
      auto inst = std::make_shared<const ReluInstance>(
          make_relu_instance(d, n, w_star, trial_rng.substream(3).next_u64()));
      FunctionPairOracle oracle = make_relu_oracle(inst);
      rec = zpsgd(oracle, w0, cfg, opt_rng);
    }

    for (const auto& w : rec.iterates) {
      ++total_steps;
      if (in_region(w, w_star)) ++in_region_steps;
    }
    const double dist = (rec.final_iterate() - w_star).norm();
    rep.final_dist.push_back(dist);
    if (dist <= eps) ++rep.successes;
  }
  rep.success_rate = static_cast<double>(rep.successes) / std::max(1, trials);
  rep.containment = static_cast<double>(in_region_steps) / std::max<long>(1, total_steps);
  return rep;
}

void save_relu_dataset(const ReluInstance& inst, const std::string& data_path,
                       const std::string& meta_path) {
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + data_path);
  const char magic[8] = {'S', 'O', 'S', 'P', 'R', 'E', 'L', 'U'};
  out.write(magic, 8);
  const std::int64_t dims[2] = {inst.d, inst.n};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (long i = 0; i < inst.n; ++i)
    for (int j = 0; j < inst.d; ++j) {
      const double v = inst.X(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  out.write(reinterpret_cast<const char*>(inst.y.data()),
            static_cast<std::streamsize>(sizeof(double) * inst.n));

  nlohmann::json j;
  j["d"] = inst.d;
  j["n"] = inst.n;
  j["seed"] = inst.seed;
  j["w_star_commitment"] =
      inst.has_target() ? direction_commitment(inst.w_star) : "absent";
  std::ofstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot write " + meta_path);
  meta << j.dump(2) << "\n";
}

ReluInstance load_relu_dataset(const std::string& data_path,
                               const std::string& meta_path) {
  std::ifstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot read " + meta_path);
  nlohmann::json j;
  meta >> j;

  ReluInstance inst;
  inst.d = j.at("d").get<int>();
  inst.n = j.at("n").get<long>();
  inst.seed = j.at("seed").get<std::uint64_t>();

  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + data_path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "SOSPRELU", 8) != 0)
    throw std::runtime_error("bad dataset magic in " + data_path);
  std::int64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (dims[0] != inst.d || dims[1] != inst.n)
    throw std::runtime_error("dataset shape does not match metadata");
  inst.X.resize(inst.n, inst.d);
  for (long i = 0; i < inst.n; ++i)
    for (int j2 = 0; j2 < inst.d; ++j2) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      inst.X(i, j2) = v;
    }
  inst.y.resize(inst.n);
  in.read(reinterpret_cast<char*>(inst.y.data()),
          static_cast<std::streamsize>(sizeof(double) * inst.n));
  if (!in) throw std::runtime_error("truncated dataset file " + data_path);
  return inst;
}

}  // namespace sosp
