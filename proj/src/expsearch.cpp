#include "sosp/expsearch.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace sosp {

namespace {

long checked_cover_size(double per_axis, int power, long cap) {
  const double total = std::pow(per_axis, power);
  if (total > static_cast<double>(cap))
    throw std::invalid_argument("cover exceeds the cardinality cap (" +
                                std::to_string(static_cast<double>(total)) + " points)");
  return static_cast<long>(std::llround(total));
}

int model_coeffs(int d) { return d + d * (d + 1) / 2; }

// Symmetric-matrix coefficients are packed (i <= j), off-diagonals once.
void unpack_model(const Eigen::VectorXd& theta, int d, Eigen::VectorXd& g,
                  Eigen::MatrixXd& H) {
  g = theta.head(d);
  H.resize(d, d);
  int k = d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      H(i, j) = H(j, i) = theta[k];
      ++k;
    }
}

}  // namespace

std::vector<Eigen::VectorXd> ball_cover(int d, double R, double eps_c, long cap) {
  if (d <= 0 || !(R > 0.0) || !(eps_c > 0.0))
    throw std::invalid_argument("ball_cover: d, R, eps_c must be positive");
  BallCoverView view(d, R, eps_c, cap);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(view.size());
  for (long i = 0; i < view.size(); ++i) pts.push_back(view.point(i));
  return pts;
}

BallCoverView::BallCoverView(int d, double R, double eps_c, long cap) : d_(d) {
  spacing_ = eps_c / std::sqrt(static_cast<double>(d));
  jmax_ = static_cast<long>(std::floor(R * std::sqrt(static_cast<double>(d)) / eps_c)) + 1;
  per_axis_ = 2 * jmax_ + 1;
  size_ = checked_cover_size(static_cast<double>(per_axis_), d, cap);
}

Eigen::VectorXd BallCoverView::point(long index) const {
  Eigen::VectorXd x(d_);
  long rem = index;
  for (int i = d_ - 1; i >= 0; --i) {
    const long j = rem % per_axis_ - jmax_;
    rem /= per_axis_;
    x[i] = static_cast<double>(j) * spacing_;
  }
  return x;
}

std::vector<Eigen::MatrixXd> matrix_cover(int d, double ell, double eps_c, long cap) {
  if (d <= 0 || !(ell > 0.0) || !(eps_c > 0.0))
    throw std::invalid_argument("matrix_cover: d, ell, eps_c must be positive");
  const double spacing = eps_c / static_cast<double>(d);
  const long jmax = static_cast<long>(std::floor(ell * d / eps_c)) + 1;
  const long per_entry = 2 * jmax + 1;
  const int entries = d * d;
  const long total = checked_cover_size(static_cast<double>(per_entry), entries, cap);

  std::vector<Eigen::MatrixXd> out;
  out.reserve(total);
  std::vector<long> idx(entries, 0);
  for (long c = 0; c < total; ++c) {
    Eigen::MatrixXd M(d, d);
    for (int e = 0; e < entries; ++e)
      M(e / d, e % d) = static_cast<double>(idx[e] - jmax) * spacing;
    out.push_back(std::move(M));
    for (int e = entries - 1; e >= 0; --e) {
      if (++idx[e] < per_entry) break;
      idx[e] = 0;
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> sphere_cover(int d, double eps_prime) {
  if (!(eps_prime > 0.0))
    throw std::invalid_argument("sphere_cover: eps_prime must be positive");
  std::vector<Eigen::VectorXd> pts;
  if (d == 1) {
    pts.push_back(Eigen::VectorXd::Constant(1, 1.0));
    pts.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return pts;
  }
  if (d == 2) {
    long k = static_cast<long>(std::ceil(2.0 * M_PI / eps_prime));
    if (k % 2 != 0) ++k;
    for (long i = 0; i < k; ++i) {
      const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(k);
      Eigen::VectorXd z(2);
      z << std::cos(a), std::sin(a);
      pts.push_back(z);
    }
    return pts;
  }
  // Fibonacci lattice plus antipodes for d = 3; cover radius roughly
  // 2.4/sqrt(n), so n is sized to land under eps_prime.
  if (d == 3) {
    const long n = std::max<long>(16, static_cast<long>(std::ceil(8.0 / (eps_prime * eps_prime))));
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (long i = 0; i < n; ++i) {
      const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      const double phi = std::acos(1.0 - t);  // upper hemisphere
      const double theta = 2.0 * M_PI * static_cast<double>(i) / golden;
      Eigen::VectorXd z(3);
      z << std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi);
      pts.push_back(z);
      pts.push_back(-z);
    }
    return pts;
  }
  throw std::invalid_argument("sphere_cover: supported for d <= 3");
}

ProbeGeometry::ProbeGeometry(int d, double r_probe, double eps_prime)
    : d_(d), r_(r_probe), eps_prime_(eps_prime) {
  if (!(r_probe > 0.0)) throw std::invalid_argument("ProbeGeometry: r_probe must be positive");
  const auto dirs = sphere_cover(d, eps_prime);
  const long K = static_cast<long>(dirs.size());
  Z_.resize(d, K);
  for (long j = 0; j < K; ++j) Z_.col(j) = dirs[j];

  const int nc = model_coeffs(d);
  A_.resize(K, nc);
  for (long p = 0; p < K; ++p) {
    const Eigen::VectorXd delta = r_ * Z_.col(p);
    for (int i = 0; i < d; ++i) A_(p, i) = delta[i];
    int k = d;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        A_(p, k) = (i == j) ? 0.5 * delta[i] * delta[i] : delta[i] * delta[j];
        ++k;
      }
  }
  if (K < nc)
    throw std::runtime_error(
        "feasibility probe system is ill-conditioned; use a denser sphere cover");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cond = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < 1e12))
    throw std::runtime_error(
        "feasibility probe system is ill-conditioned; use a denser sphere cover");
  pinv_ = svd.solve(Eigen::MatrixXd::Identity(K, K));
}

void ProbeGeometry::fit(const Eigen::VectorXd& residuals, Eigen::VectorXd& g,
                        Eigen::MatrixXd& H) const {
  const Eigen::VectorXd theta = pinv_ * residuals;
  unpack_model(theta, d_, g, H);
}

Eigen::VectorXd ProbeGeometry::predict(const Eigen::VectorXd& g,
                                       const Eigen::MatrixXd& H) const {
  const long K = Z_.cols();
  Eigen::VectorXd out(K);
  for (long p = 0; p < K; ++p) {
    const Eigen::VectorXd delta = r_ * Z_.col(p);
    out[p] = g.dot(delta) + 0.5 * delta.dot(H * delta);
  }
  return out;
}

FeasibilityResult feasibility_probe(QueryInterface& oracle, const Eigen::VectorXd& x,
                                    double r_probe, const ProbeGeometry& geometry,
                                    double nu, double rho, double kappa) {
  if (std::abs(r_probe - geometry.radius()) > 1e-12 * std::max(1.0, geometry.radius()))
    throw std::invalid_argument("feasibility_probe: geometry built for a different radius");
  const long K = geometry.probes();
  const double f0 = oracle.value(x);
  Eigen::MatrixXd pts(x.size(), K);
  for (long p = 0; p < K; ++p) pts.col(p) = x + r_probe * geometry.directions().col(p);
  const Eigen::VectorXd b = oracle.value_batch(pts).array() - f0;

  FeasibilityResult res;
  geometry.fit(b, res.g, res.H);
  res.max_residual = (geometry.predict(res.g, res.H) - b).cwiseAbs().maxCoeff();
  res.tolerance = kappa * (rho * r_probe * r_probe * r_probe + nu);
  res.feasible = res.max_residual <= res.tolerance;
  res.grad_budget =
      2.0 * (rho * r_probe * r_probe / 6.0 + nu / r_probe) / (1.0 - geometry.eps_prime());
  res.hess_budget = 2.0 * (rho * r_probe / 3.0 + 4.0 * nu / (r_probe * r_probe)) /
                    (1.0 - 2.0 * geometry.eps_prime());
  return res;
}

std::optional<FeasibilityResult> feasibility_probe_enumerated(
    QueryInterface& oracle, const Eigen::VectorXd& x, double r_probe,
    const ProbeGeometry& geometry, double nu, double rho, double kappa,
    double g_radius, double g_resolution, double h_radius, double h_resolution,
    double accept_grad, double accept_min_eig) {
  const int d = static_cast<int>(x.size());
  if (d != 1)
    throw std::invalid_argument("feasibility_probe_enumerated: fidelity mode is 1-d only");
  const long K = geometry.probes();
  const double f0 = oracle.value(x);
  Eigen::VectorXd b(K);
  for (long p = 0; p < K; ++p)
    b[p] = oracle.value(x + r_probe * geometry.directions().col(p)) - f0;
  const double tol = kappa * (rho * r_probe * r_probe * r_probe + nu);

  const long gj = static_cast<long>(std::floor(g_radius / g_resolution)) + 1;
  const long hj = static_cast<long>(std::floor(h_radius / h_resolution)) + 1;
  for (long a = -gj; a <= gj; ++a) {
    const double g = static_cast<double>(a) * g_resolution;
    if (std::abs(g) > accept_grad) continue;
    for (long c = -hj; c <= hj; ++c) {
      const double H = static_cast<double>(c) * h_resolution;
      if (H < accept_min_eig) continue;
      double worst = 0.0;
      for (long p = 0; p < K; ++p) {
        const double delta = r_probe * geometry.directions()(0, p);
        worst = std::max(worst, std::abs(g * delta + 0.5 * H * delta * delta - b[p]));
        if (worst > tol) break;
      }
      if (worst <= tol) {
        FeasibilityResult res;
        res.feasible = true;
        res.g = Eigen::VectorXd::Constant(1, g);
        res.H = Eigen::MatrixXd::Constant(1, 1, H);
        res.max_residual = worst;
        res.tolerance = tol;
        return res;
      }
    }
  }
  return std::nullopt;
}

SearchResult exhaustive_sosp_search(QueryInterface& oracle, int d, double eps,
                                    double ell, double rho, double bound_B, double nu,
                                    const SearchOptions& opts) {
  if (d > 3) throw std::invalid_argument("exhaustive_sosp_search: d <= 3 enforced");
  if (!(eps > 0.0) || !(ell > 0.0) || !(rho > 0.0) || !(bound_B > 0.0) || nu < 0.0)
    throw std::invalid_argument("exhaustive_sosp_search: bad constants");

  const double R = opts.cover_radius > 0.0 ? opts.cover_radius : bound_B / eps;
  const double r_probe =
      opts.probe_radius > 0.0 ? opts.probe_radius : opts.c_prime * std::sqrt(eps / rho);
  const BallCoverView cover(d, R, eps / ell, opts.cover_cap);
  const ProbeGeometry geometry(d, r_probe, opts.eps_prime);

  // Headline thresholds 2 eps and -2 sqrt(rho eps), pulled in by the probe's
  // certified error budgets (capped to keep the acceptance window open) so
  // that accepted points verify at (2 eps, rho).
  const double grad_budget =
      2.0 * (rho * r_probe * r_probe / 6.0 + nu / r_probe) / (1.0 - opts.eps_prime);
  const double hess_budget = 2.0 * (rho * r_probe / 3.0 + 4.0 * nu / (r_probe * r_probe)) /
                             (1.0 - 2.0 * opts.eps_prime);
  const double accept_grad = 2.0 * eps - std::min(grad_budget, eps);
  const double accept_min_eig =
      -2.0 * std::sqrt(rho * eps) + std::min(hess_budget, std::sqrt(rho * eps));

  SearchResult out;
  out.accept_grad = accept_grad;
  out.accept_min_eig = accept_min_eig;
  out.in_guarantee_regime = nu <= std::sqrt(eps * eps * eps / rho) / 10.0;

  // Cheap screen: an axis central difference whose norm exceeds the
  // acceptance cut by every certified error budget rules the point out
  // before the full probe runs. Never skips an acceptable point.
  const double cd_budget = std::sqrt(static_cast<double>(d)) *
                           (rho * r_probe * r_probe / 6.0 + nu / r_probe);
  const double screen = 3.0 * (accept_grad + grad_budget + cd_budget) + 1e-12;
  Eigen::MatrixXd axis_pts(d, 2 * d);

  for (long i = 0; i < cover.size(); ++i) {
    const Eigen::VectorXd x = cover.point(i);
    ++out.probes_run;
    if (opts.pure_enumeration) {
      auto res = feasibility_probe_enumerated(
          oracle, x, r_probe, geometry, nu, rho, opts.kappa, 3.0 * eps, eps / ell,
          ell, eps / ell, accept_grad, accept_min_eig);
      if (res) {
        out.x = x;
        out.fit = *res;
        out.index = i;
        return out;
      }
      continue;
    }
    for (int a = 0; a < d; ++a) {
      axis_pts.col(2 * a) = x;
      axis_pts.col(2 * a)[a] += r_probe;
      axis_pts.col(2 * a + 1) = x;
      axis_pts.col(2 * a + 1)[a] -= r_probe;
    }
    const Eigen::VectorXd vals = oracle.value_batch(axis_pts);
    double screen_norm2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double gi = (vals[2 * a] - vals[2 * a + 1]) / (2.0 * r_probe);
      screen_norm2 += gi * gi;
    }
    if (screen_norm2 > screen * screen) continue;
    FeasibilityResult res =
        feasibility_probe(oracle, x, r_probe, geometry, nu, rho, opts.kappa);
    if (!res.feasible) continue;
    if (res.g.norm() > accept_grad) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.H);
    if (es.eigenvalues().minCoeff() < accept_min_eig) continue;
    out.x = x;
    out.fit = res;
    out.index = i;
    return out;
  }
  throw std::runtime_error(
      "exhaustive_sosp_search: cover exhausted without acceptance; declared "
      "B/ell/rho/nu are inconsistent with the search premise");
}

}  // namespace sosp
