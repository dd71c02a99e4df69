#include "sosp/stationarity.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sosp/rng.hpp"

namespace sosp {

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& F,
                                 const Eigen::VectorXd& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd g(d);
  Eigen::VectorXd p = x;
  for (int i = 0; i < d; ++i) {
    const double xi = x[i];
    p[i] = xi + h;
    const double fp = F(p);
    p[i] = xi - h;
    const double fm = F(p);
    p[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd finite_diff_hess(const std::function<double(const Eigen::VectorXd&)>& F,
                                 const Eigen::VectorXd& x, double h) {
  const int d = static_cast<int>(x.size());
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd p = x;
  const double f0 = F(x);
  for (int i = 0; i < d; ++i) {
    const double xi = x[i];
    p[i] = xi + h;
    const double fp = F(p);
    p[i] = xi - h;
    const double fm = F(p);
    p[i] = xi;
    H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double xi = x[i], xj = x[j];
      p[i] = xi + h; p[j] = xj + h;
      const double fpp = F(p);
      p[j] = xj - h;
      const double fpm = F(p);
      p[i] = xi - h; p[j] = xj + h;
      const double fmp = F(p);
      p[j] = xj - h;
      const double fmm = F(p);
      p[i] = xi; p[j] = xj;
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return H;
}

Eigen::MatrixXd finite_diff_hess_from_grad(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double h) {
  const int d = static_cast<int>(x.size());
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd p = x;
  for (int i = 0; i < d; ++i) {
    const double xi = x[i];
    p[i] = xi + h;
    const Eigen::VectorXd gp = grad(p);
    p[i] = xi - h;
    const Eigen::VectorXd gm = grad(p);
    p[i] = xi;
    H.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

double min_eig_matrix_free(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& hvp, int dim,
    double tol, int max_iters) {
  if (dim <= 0) throw std::invalid_argument("min_eig_matrix_free: dim must be positive");
  const int kmax = std::min(dim, max_iters);

  // Deterministic pseudo-random start vector.
  RngStream rng(0x5eed0123456789abull, static_cast<std::uint64_t>(dim));
  Eigen::VectorXd q = rng.gaussian_vector(dim);
  q.normalize();

  std::vector<Eigen::VectorXd> basis;
  basis.reserve(kmax);
  std::vector<double> alpha, beta;
  basis.push_back(q);

  double min_ritz = 0.0, max_ritz = 0.0, residual = 0.0;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(dim);
  double beta_prev = 0.0;

  for (int k = 0; k < kmax; ++k) {
    Eigen::VectorXd w = hvp(basis[k]);
    if (!w.allFinite()) throw std::runtime_error("min_eig_matrix_free: non-finite product");
    const double a = basis[k].dot(w);
    alpha.push_back(a);
    w -= a * basis[k];
    if (k > 0) w -= beta_prev * prev;
    // Full reorthogonalization keeps the Ritz values honest at small dims.
    for (const auto& b : basis) w -= b.dot(w) * b;
    const double bnorm = w.norm();

    // Ritz values of the current tridiagonal matrix.
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    min_ritz = es.eigenvalues().minCoeff();
    max_ritz = es.eigenvalues().maxCoeff();
    const double scale = std::max(std::abs(min_ritz), std::abs(max_ritz));

    int min_idx = 0;
    es.eigenvalues().minCoeff(&min_idx);
    residual = bnorm * std::abs(es.eigenvectors()(m - 1, min_idx));
    if (residual <= tol * std::max(scale, 1e-300) || bnorm <= 1e-14 * std::max(scale, 1.0) ||
        m == dim) {
      return min_ritz;
    }
    if (k + 1 == kmax) break;
    beta.push_back(bnorm);
    beta_prev = bnorm;
    prev = basis[k];
    basis.push_back(w / bnorm);
  }
  throw std::runtime_error("min_eig_matrix_free: no convergence after iteration cap, residual=" +
                           std::to_string(residual));
}

namespace {

constexpr int kDenseEigMaxDim = 64;

}  // namespace

StationarityReport check_sosp(const TruthView& truth, const Eigen::VectorXd& x,
                              double eps, double rho) {
  if (!truth.value && !truth.grad)
    throw std::invalid_argument("check_sosp: truth must provide a value or gradient");
  const int d = static_cast<int>(x.size());
  const double h = std::max(1e-5, 1e-5 * x.norm());

  StationarityReport rep;
  rep.eps = eps;
  rep.rho = rho;

  Eigen::VectorXd g;
  if (truth.grad) {
    g = truth.grad(x);
    rep.method = DerivativeMethod::Analytic;
  } else {
    g = finite_diff_grad(truth.value, x, h);
    rep.method = DerivativeMethod::FiniteDifference;
  }
  rep.grad_norm = g.norm();

  double spectral_scale = 1.0;
  if (d <= kDenseEigMaxDim) {
    Eigen::MatrixXd H;
    if (truth.hess) {
      H = truth.hess(x);
    } else if (truth.grad) {
      H = finite_diff_hess_from_grad(truth.grad, x, h);
      rep.method = DerivativeMethod::FiniteDifference;
    } else {
      H = finite_diff_hess(truth.value, x, h);
      rep.method = DerivativeMethod::FiniteDifference;
    }
    if (!H.allFinite() || !g.allFinite()) {
      rep.derivatives_finite = false;
      return rep;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    rep.min_eig = es.eigenvalues().minCoeff();
    spectral_scale = std::max(std::abs(es.eigenvalues().minCoeff()),
                              std::abs(es.eigenvalues().maxCoeff()));
  } else {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> hvp;
    if (truth.hvp) {
      hvp = [&](const Eigen::VectorXd& u) { return truth.hvp(x, u); };
    } else if (truth.hess) {
      const Eigen::MatrixXd H = truth.hess(x);
      hvp = [H](const Eigen::VectorXd& u) { return Eigen::VectorXd(H * u); };
    } else if (truth.grad) {
      hvp = [&](const Eigen::VectorXd& u) {
        const double s = h / std::max(u.norm(), 1e-300);
        return Eigen::VectorXd((truth.grad(x + s * u) - truth.grad(x - s * u)) / (2.0 * s));
      };
    } else {
      throw std::invalid_argument(
          "check_sosp: matrix-free path needs a gradient or Hessian evaluator");
    }
    rep.method = truth.hvp || truth.hess ? DerivativeMethod::MatrixFree
                                         : DerivativeMethod::FiniteDifference;
    rep.min_eig = min_eig_matrix_free(hvp, d, 1e-8);
    spectral_scale = std::abs(rep.min_eig);
  }

  if (!g.allFinite() || !std::isfinite(rep.min_eig)) {
    rep.derivatives_finite = false;
    return rep;
  }
  rep.eig_tol = 1e-6 * std::max(1.0, spectral_scale);
  rep.verdict = rep.grad_norm <= eps && rep.min_eig >= -std::sqrt(rho * eps) - rep.eig_tol;
  return rep;
}

std::string to_string(DerivativeMethod m) {
  switch (m) {
    case DerivativeMethod::Analytic: return "analytic";
    case DerivativeMethod::FiniteDifference: return "finite-difference";
    case DerivativeMethod::MatrixFree: return "matrix-free";
  }
  return "unknown";
}

}  // namespace sosp
