#include "sosp/smoothing.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sosp/stationarity.hpp"

namespace sosp {

namespace {

constexpr long kChunk = 8192;

void check_cfg(const SmoothingConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("smoothing: sigma must be positive");
  if (cfg.batch < 1) throw std::invalid_argument("smoothing: batch must be at least 1");
}

}  // namespace

Eigen::VectorXd grad_sample(QueryInterface& oracle, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& z, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("grad_sample: sigma must be positive");
  const double fp = oracle.value(x + z);
  const double f0 = oracle.value(x);
  return z * ((fp - f0) / (sigma * sigma));
}

Eigen::VectorXd grad_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                              const SmoothingConfig& cfg, RngStream& rng) {
  check_cfg(cfg);
  const int d = static_cast<int>(x.size());
  const double f0 = oracle.value(x);

  // Chunked accumulation; partials are combined in chunk order so the
  // arithmetic order is fixed no matter how batches are evaluated.
  std::vector<Eigen::VectorXd> partials;
  Eigen::MatrixXd Z(d, kChunk), pts(d, kChunk);
  for (long done = 0; done < cfg.batch;) {
    const long c = std::min(kChunk, cfg.batch - done);
    for (long j = 0; j < c; ++j)
      for (int i = 0; i < d; ++i) Z(i, j) = cfg.sigma * rng.next_gaussian();
    pts.leftCols(c) = Z.leftCols(c).colwise() + x;
    const Eigen::VectorXd vals = oracle.value_batch(pts.leftCols(c));
    partials.emplace_back(Z.leftCols(c) * (vals.array() - f0).matrix());
    done += c;
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
  for (const auto& p : partials) total += p;
  return total / (static_cast<double>(cfg.batch) * cfg.sigma * cfg.sigma);
}

double smoothed_value_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                               const SmoothingConfig& cfg, RngStream& rng) {
  check_cfg(cfg);
  const int d = static_cast<int>(x.size());
  std::vector<double> partials;
  Eigen::MatrixXd pts(d, kChunk);
  for (long done = 0; done < cfg.batch;) {
    const long c = std::min(kChunk, cfg.batch - done);
    for (long j = 0; j < c; ++j)
      for (int i = 0; i < d; ++i) pts(i, j) = x[i] + cfg.sigma * rng.next_gaussian();
    partials.push_back(oracle.value_batch(pts.leftCols(c)).sum());
    done += c;
  }
  double total = 0.0;
  for (double p : partials) total += p;
  return total / static_cast<double>(cfg.batch);
}

Eigen::MatrixXd smoothed_hessian_estimate(QueryInterface& oracle,
                                          const Eigen::VectorXd& x,
                                          const SmoothingConfig& cfg, RngStream& rng) {
  check_cfg(cfg);
  const int d = static_cast<int>(x.size());
  const double s2 = cfg.sigma * cfg.sigma;

  Eigen::MatrixXd outer_sum = Eigen::MatrixXd::Zero(d, d);
  double val_sum = 0.0;
  Eigen::MatrixXd Z(d, kChunk), pts(d, kChunk);
  for (long done = 0; done < cfg.batch;) {
    const long c = std::min(kChunk, cfg.batch - done);
    for (long j = 0; j < c; ++j)
      for (int i = 0; i < d; ++i) Z(i, j) = cfg.sigma * rng.next_gaussian();
    pts.leftCols(c) = Z.leftCols(c).colwise() + x;
    const Eigen::VectorXd vals = oracle.value_batch(pts.leftCols(c));
    outer_sum.noalias() +=
        Z.leftCols(c) * vals.asDiagonal() * Z.leftCols(c).transpose();
    val_sum += vals.sum();
    done += c;
  }
  Eigen::MatrixXd H = outer_sum;
  H.diagonal().array() -= s2 * val_sum;
  H /= static_cast<double>(cfg.batch) * s2 * s2;
  return 0.5 * (H + H.transpose());
}

Eigen::VectorXd fpsgd_grad_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                                    const SmoothingConfig& cfg, RngStream& rng) {
  if (!oracle.has_grad())
    throw std::logic_error("fpsgd_grad_estimate: oracle exposes no gradient query");
  if (cfg.batch < 1) throw std::invalid_argument("smoothing: batch must be at least 1");
  if (cfg.sigma < 0.0) throw std::invalid_argument("smoothing: sigma must be nonnegative");
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
  for (long i = 0; i < cfg.batch; ++i) {
    if (cfg.sigma > 0.0) {
      total += oracle.grad(x + rng.gaussian_vector(d, cfg.sigma));
    } else {
      total += oracle.grad(x);
    }
  }
  return total / static_cast<double>(cfg.batch);
}

SmoothingBoundReport verify_smoothing_bounds(FunctionPairOracle& pair, double nu,
                                             double rho, double sigma, int n_points,
                                             long inner_samples, double domain_radius,
                                             RngStream& rng) {
  if (!pair.has_truth())
    throw std::invalid_argument("verify_smoothing_bounds: instance has no truth view");
  if (!(sigma > 0.0)) throw std::invalid_argument("verify_smoothing_bounds: sigma > 0 required");
  const int d = pair.dim();
  const auto& truth = pair.truth();
  const double s2 = sigma * sigma;

  SmoothingBoundReport rep;
  rep.sigma = sigma;
  rep.nu = nu;
  rep.rho = rho;
  rep.inner_samples = inner_samples;
  rep.points = n_points;
  rep.grad_bound = std::sqrt(2.0 / M_PI) * nu / sigma + rho * d * s2;
  rep.hess_bound = rho * std::sqrt(static_cast<double>(d)) * sigma + 2.0 * nu / s2;

  for (int p = 0; p < n_points; ++p) {
    const Eigen::VectorXd x = rng.uniform_ball(d, domain_radius);
    const double f0 = pair.value(x);

    Eigen::VectorXd gsum = Eigen::VectorXd::Zero(d), gsq = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd hsum = Eigen::MatrixXd::Zero(d, d), hsq = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd z(d);
    for (long n = 0; n < inner_samples; ++n) {
      for (int i = 0; i < d; ++i) z[i] = sigma * rng.next_gaussian();
      const double fd = pair.value(x + z) - f0;
      const Eigen::VectorXd g = z * (fd / s2);
      gsum += g;
      gsq += g.cwiseAbs2();
      Eigen::MatrixXd hs = (z * z.transpose());
      hs.diagonal().array() -= s2;
      hs *= fd / (s2 * s2);
      hsum += hs;
      hsq += hs.cwiseAbs2();
    }
    const double N = static_cast<double>(inner_samples);
    const Eigen::VectorXd gmean = gsum / N;
    const Eigen::MatrixXd hmean = 0.5 * (hsum + hsum.transpose()) / N;
    const Eigen::VectorXd gvar = (gsq / N - gmean.cwiseAbs2()).cwiseMax(0.0);
    const Eigen::MatrixXd hvar = (hsq / N - (hsum / N).cwiseAbs2()).cwiseMax(0.0);

    SmoothingDeviation dev;
    dev.x = x;
    dev.grad_slack = 4.0 * std::sqrt(gvar.sum() / N);
    dev.hess_slack = 4.0 * std::sqrt(hvar.sum() / N);

    const Eigen::VectorXd gF =
        truth.grad ? truth.grad(x) : finite_diff_grad(truth.value, x, 1e-6);
    dev.grad_dev = (gmean - gF).norm();

    const Eigen::MatrixXd HF = truth.hess ? truth.hess(x)
                               : truth.grad
                                   ? finite_diff_hess_from_grad(truth.grad, x, 1e-5)
                                   : finite_diff_hess(truth.value, x, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hmean - HF);
    dev.hess_dev = es.eigenvalues().cwiseAbs().maxCoeff();

    rep.max_grad_dev = std::max(rep.max_grad_dev, dev.grad_dev);
    rep.max_hess_dev = std::max(rep.max_hess_dev, dev.hess_dev);
    const bool gv = dev.grad_dev > rep.grad_bound + dev.grad_slack;
    const bool hv = dev.hess_dev > rep.hess_bound + dev.hess_slack;
    if (gv) ++rep.grad_violations;
    if (hv) ++rep.hess_violations;
    if (gv || hv) rep.worst.push_back(dev);
  }
  return rep;
}

}  // namespace sosp
