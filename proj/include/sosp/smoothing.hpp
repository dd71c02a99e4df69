#pragma once

#include <Eigen/Core>

#include "sosp/oracle.hpp"
#include "sosp/rng.hpp"

namespace sosp {

/// Gaussian smoothing parameters: radius sigma and mini-batch size m.
struct SmoothingConfig {
  double sigma = 0.1;
  long batch = 1;
};

/// Single-sample stochastic gradient z * (f(x+z) - f(x)) / sigma^2.
/// Costs exactly 2 value queries.
Eigen::VectorXd grad_sample(QueryInterface& oracle, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& z, double sigma);

/// Mini-batch estimate of the smoothed gradient: the mean of m single-sample
/// estimates sharing one f(x) evaluation. Costs m + 1 value queries.
/// Unbiased for the gradient of the Gaussian smoothing of f.
Eigen::VectorXd grad_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                              const SmoothingConfig& cfg, RngStream& rng);

/// Monte Carlo mean of f(x+z) over m draws; unbiased for the smoothed value.
double smoothed_value_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                               const SmoothingConfig& cfg, RngStream& rng);

/// Monte Carlo mean of (z z^T - sigma^2 I) f(x+z) / sigma^4, symmetrized.
/// Unbiased for the Hessian of the smoothed function.
Eigen::MatrixXd smoothed_hessian_estimate(QueryInterface& oracle,
                                          const Eigen::VectorXd& x,
                                          const SmoothingConfig& cfg, RngStream& rng);

/// Mean of m gradient-oracle evaluations at Gaussian-perturbed points.
/// Requires a gradient query; costs m gradient queries.
Eigen::VectorXd fpsgd_grad_estimate(QueryInterface& oracle, const Eigen::VectorXd& x,
                                    const SmoothingConfig& cfg, RngStream& rng);

/// One audited point of verify_smoothing_bounds.
struct SmoothingDeviation {
  Eigen::VectorXd x;
  double grad_dev = 0.0;   // || grad f_sigma(x) - grad F(x) ||, Monte Carlo
  double grad_slack = 0.0; // 4 * stderr of the Monte Carlo gradient
  double hess_dev = 0.0;   // spectral-norm deviation of the smoothed Hessian
  double hess_slack = 0.0; // 4 * stderr (Frobenius bound) of the MC Hessian
};

struct SmoothingBoundReport {
  double sigma = 0.0, nu = 0.0, rho = 0.0;
  long inner_samples = 0;
  int points = 0;
  // Deviation bounds with explicit constants:
  //   gradient: sqrt(2/pi) nu/sigma + rho d sigma^2
  //   Hessian:  rho sqrt(d) sigma + 2 nu/sigma^2
  double grad_bound = 0.0;
  double hess_bound = 0.0;
  double max_grad_dev = 0.0;
  double max_hess_dev = 0.0;
  int grad_violations = 0;
  int hess_violations = 0;
  std::vector<SmoothingDeviation> worst;  // any violating points
  bool ok() const { return grad_violations == 0 && hess_violations == 0; }
};

/// Checks the smoothed-derivative deviation bounds against the declared
/// (rho, nu) of an instance with a truth view, at `n_points` sampled
/// uniformly from the ball of `domain_radius` around the origin, using
/// `inner_samples` Monte Carlo draws per point and a 4*stderr slack.
SmoothingBoundReport verify_smoothing_bounds(FunctionPairOracle& pair, double nu,
                                             double rho, double sigma, int n_points,
                                             long inner_samples, double domain_radius,
                                             RngStream& rng);

}  // namespace sosp
