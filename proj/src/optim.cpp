#include "sosp/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sosp {

void OptimizerConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("OptimizerConfig: eta must be positive");
  if (perturb_radius < 0.0)
    throw std::invalid_argument("OptimizerConfig: perturb_radius must be nonnegative");
  if (sigma < 0.0) throw std::invalid_argument("OptimizerConfig: sigma must be nonnegative");
  if (batch < 1) throw std::invalid_argument("OptimizerConfig: batch must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
  if (!(epsilon > 0.0) || !(ell > 0.0) || !(rho > 0.0) || !(bound_B > 0.0))
    throw std::invalid_argument("OptimizerConfig: epsilon, ell, rho, bound_B must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("OptimizerConfig: delta must lie in (0,1)");
}

OptimizerConfig default_config(int d, double epsilon, double ell, double rho,
                               double bound_B, double delta, double schedule_c,
                               long batch_cap, long iter_cap) {
  if (d <= 0) throw std::invalid_argument("default_config: d must be positive");
  OptimizerConfig cfg;
  cfg.epsilon = epsilon;
  cfg.ell = ell;
  cfg.rho = rho;
  cfg.bound_B = bound_B;
  cfg.delta = delta;
  cfg.schedule_c = schedule_c;
  cfg.batch_cap = batch_cap;
  cfg.iter_cap = iter_cap;
  cfg.validate();

  const double c = schedule_c;
  const double delta_hat = 2.0 * bound_B;  // stand-in for the unknown initial gap
  cfg.chi = std::max(1.0, std::log(d * ell * delta_hat / (rho * epsilon * delta)));
  cfg.sigma = std::sqrt(epsilon / (rho * d));
  cfg.eta = 1.0 / ell;
  cfg.perturb_radius = epsilon * std::pow(cfg.chi, -3.0) * std::pow(c, -6.0);
  cfg.escape_steps = cfg.chi * c / (cfg.eta * std::sqrt(rho * epsilon));
  cfg.escape_drop =
      std::sqrt(epsilon * epsilon * epsilon / rho) * std::pow(cfg.chi, -3.0) * std::pow(c, -5.0);

  const double t_theory = std::ceil(2.0 * delta_hat * std::pow(cfg.chi, 4.0) * ell /
                                    (epsilon * epsilon));
  cfg.iters_theoretical = t_theory > 1e18 ? static_cast<long>(1e18)
                                          : static_cast<long>(t_theory);
  cfg.max_iters = std::min<long>(cfg.iters_theoretical, iter_cap);

  // Mini-batch size from the concentration rule: with lambda = chi c and the
  // estimator's sub-Gaussian parameter B/sigma, m >= 2 lambda^2 (B/sigma)^2
  // log(d/delta) / eps^2 drives the gradient noise below eps/lambda.
  const double lambda = cfg.chi * c;
  const double subg = bound_B / cfg.sigma;
  const double m_theory = std::ceil(2.0 * lambda * lambda * subg * subg *
                                    std::log(static_cast<double>(d) / delta) /
                                    (epsilon * epsilon));
  cfg.batch_theoretical = m_theory > 1e18 ? static_cast<long>(1e18)
                                          : static_cast<long>(std::max(1.0, m_theory));
  cfg.batch = std::min<long>(cfg.batch_theoretical, batch_cap);
  return cfg;
}

namespace {

void abort_if_not_finite(const Eigen::VectorXd& x, long step) {
  if (!x.allFinite())
    throw std::runtime_error("optimizer: iterate became non-finite at step " +
                             std::to_string(step));
}

bool early_stop_hit(const EarlyStop* early, const Eigen::VectorXd& x, long step) {
  if (!early || !early->truth) return false;
  if (step % std::max<long>(1, early->stride) != 0) return false;
  return check_sosp(*early->truth, x, early->eps, early->rho).verdict;
}

template <typename GradFn>
RunRecord perturbed_sgd_loop(GradFn&& grad_at, const Eigen::VectorXd& x0,
                             const OptimizerConfig& cfg, RngStream& rng,
                             const EarlyStop* early) {
  cfg.validate();
  const int d = static_cast<int>(x0.size());
  RunRecord rec;
  rec.iterates.reserve(cfg.max_iters + 1);
  rec.steps.reserve(cfg.max_iters);
  rec.iterates.push_back(x0);

  Eigen::VectorXd x = x0;
  for (long t = 0; t < cfg.max_iters; ++t) {
    const Eigen::VectorXd g = grad_at(x);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
    if (cfg.perturb_radius > 0.0) xi = rng.uniform_ball(d, cfg.perturb_radius);
    x -= cfg.eta * (g + xi);
    abort_if_not_finite(x, t);
    rec.iterates.push_back(x);
    rec.steps.push_back({g.norm(), xi.norm()});
    if (early_stop_hit(early, x, t + 1)) {
      rec.early_stopped = true;
      break;
    }
  }
  return rec;
}

}  // namespace

RunRecord zpsgd(QueryInterface& oracle, const Eigen::VectorXd& x0,
                const OptimizerConfig& cfg, RngStream& rng, const EarlyStop* early_stop) {
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("zpsgd: sigma must be positive");
  const std::uint64_t q0 = oracle.queries();
  SmoothingConfig scfg{cfg.sigma, cfg.batch};
  auto rec = perturbed_sgd_loop(
      [&](const Eigen::VectorXd& x) { return grad_estimate(oracle, x, scfg, rng); }, x0,
      cfg, rng, early_stop);
  rec.queries_used = oracle.queries() - q0;
  return rec;
}

RunRecord fpsgd(QueryInterface& oracle, const Eigen::VectorXd& x0,
                const OptimizerConfig& cfg, RngStream& rng, const EarlyStop* early_stop) {
  if (!oracle.has_grad()) throw std::invalid_argument("fpsgd: oracle has no gradient query");
  const std::uint64_t q0 = oracle.queries();
  SmoothingConfig scfg{cfg.sigma, cfg.batch};
  auto rec = perturbed_sgd_loop(
      [&](const Eigen::VectorXd& x) { return fpsgd_grad_estimate(oracle, x, scfg, rng); },
      x0, cfg, rng, early_stop);
  rec.queries_used = oracle.queries() - q0;
  return rec;
}

RunRecord psgd(const GradSampler& sampler, const Eigen::VectorXd& x0,
               const OptimizerConfig& cfg, RngStream& rng, const EarlyStop* early_stop) {
  if (!sampler) throw std::invalid_argument("psgd: sampler required");
  std::uint64_t calls = 0;
  auto rec = perturbed_sgd_loop(
      [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd total = Eigen::VectorXd::Zero(x.size());
        for (long i = 0; i < cfg.batch; ++i) {
          total += sampler(x, rng);
          ++calls;
        }
        return Eigen::VectorXd(total / static_cast<double>(cfg.batch));
      },
      x0, cfg, rng, early_stop);
  rec.queries_used = calls;
  return rec;
}

RunRecord gd_baseline(QueryInterface& oracle, const Eigen::VectorXd& x0, double eta,
                      long max_iters) {
  if (!(eta > 0.0)) throw std::invalid_argument("gd_baseline: eta must be positive");
  if (max_iters < 1) throw std::invalid_argument("gd_baseline: max_iters must be >= 1");
  if (!oracle.has_grad())
    throw std::invalid_argument("gd_baseline: oracle has no gradient query");
  const std::uint64_t q0 = oracle.queries();
  RunRecord rec;
  rec.iterates.reserve(max_iters + 1);
  rec.iterates.push_back(x0);
  Eigen::VectorXd x = x0;
  for (long t = 0; t < max_iters; ++t) {
    const Eigen::VectorXd g = oracle.grad(x);
    x -= eta * g;
    abort_if_not_finite(x, t);
    rec.iterates.push_back(x);
    rec.steps.push_back({g.norm(), 0.0});
  }
  rec.queries_used = oracle.queries() - q0;
  return rec;
}

}  // namespace sosp
