#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

#include "sosp/oracle.hpp"

namespace sosp {

enum class DerivativeMethod { Analytic, FiniteDifference, MatrixFree };

/// Verdict on ||grad F(x)|| <= eps and lambda_min(hess F(x)) >= -sqrt(rho eps).
struct StationarityReport {
  double grad_norm = 0.0;
  double min_eig = 0.0;
  double eps = 0.0;
  double rho = 0.0;
  double eig_tol = 0.0;
  bool derivatives_finite = true;
  bool verdict = false;
  DerivativeMethod method = DerivativeMethod::Analytic;
};

/// Central differences per coordinate; O(h^2) accurate for C^3 functions.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& F,
                                 const Eigen::VectorXd& x, double h);

/// Symmetric central-difference Hessian of a scalar function.
Eigen::MatrixXd finite_diff_hess(const std::function<double(const Eigen::VectorXd&)>& F,
                                 const Eigen::VectorXd& x, double h);

/// Central-difference Hessian computed from a gradient evaluator.
Eigen::MatrixXd finite_diff_hess_from_grad(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double h);

/// Smallest eigenvalue of a symmetric operator given only Hessian-vector
/// products, via Lanczos iteration with full reorthogonalization.
/// Accurate to tol * (spectral-norm estimate). Throws on non-convergence,
/// reporting the final residual.
double min_eig_matrix_free(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& hvp, int dim,
    double tol, int max_iters = 300);

/// Evaluates the second-order stationarity test of the target at x.
/// Uses analytic derivatives from the truth view when available, otherwise
/// central differences with step max(1e-5, 1e-5 ||x||); the smallest
/// eigenvalue comes from a dense symmetric eigensolver for dim <= 64 and
/// from matrix-free Lanczos on Hessian-vector products above that.
StationarityReport check_sosp(const TruthView& truth, const Eigen::VectorXd& x,
                              double eps, double rho);

std::string to_string(DerivativeMethod m);

}  // namespace sosp
