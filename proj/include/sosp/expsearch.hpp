#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sosp/oracle.hpp"

namespace sosp {

/// Axis-aligned grid with spacing eps_c/sqrt(d) covering the ball of radius
/// R; every ball point is within eps_c of a grid point. Refuses covers
/// larger than `cap`.
std::vector<Eigen::VectorXd> ball_cover(int d, double R, double eps_c,
                                        long cap = 10'000'000);

/// Entrywise grid with spacing eps_c/d covering the d x d matrices of
/// spectral norm at most ell (Frobenius dominates the spectral norm).
std::vector<Eigen::MatrixXd> matrix_cover(int d, double ell, double eps_c,
                                          long cap = 10'000'000);

/// Symmetric covering of the unit sphere at resolution eps_prime.
std::vector<Eigen::VectorXd> sphere_cover(int d, double eps_prime);

/// Random-index view of the ball-cover grid, used by the exhaustive search
/// so large covers never materialize.
class BallCoverView {
 public:
  BallCoverView(int d, double R, double eps_c, long cap);
  long size() const { return size_; }
  Eigen::VectorXd point(long index) const;
  double spacing() const { return spacing_; }

 private:
  int d_;
  long per_axis_;
  long jmax_;
  long size_;
  double spacing_;
};

/// Precomputed probe geometry: sphere cover directions and the least-squares
/// pseudoinverse mapping probe values to a local (gradient, Hessian) model.
class ProbeGeometry {
 public:
  ProbeGeometry(int d, double r_probe, double eps_prime);
  int dim() const { return d_; }
  double radius() const { return r_; }
  double eps_prime() const { return eps_prime_; }
  const Eigen::MatrixXd& directions() const { return Z_; }  // d x K
  long probes() const { return Z_.cols(); }

  /// Fits (g, H) to probe residuals f(x + r z) - f(x) by least squares.
  void fit(const Eigen::VectorXd& residuals, Eigen::VectorXd& g,
           Eigen::MatrixXd& H) const;
  /// Model prediction for every probe direction.
  Eigen::VectorXd predict(const Eigen::VectorXd& g, const Eigen::MatrixXd& H) const;

 private:
  int d_;
  double r_;
  double eps_prime_;
  Eigen::MatrixXd Z_;     // probe directions
  Eigen::MatrixXd A_;     // design matrix: rows per probe, cols per model coeff
  Eigen::MatrixXd pinv_;  // (model coeffs) x (probes)
};

struct FeasibilityResult {
  bool feasible = false;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  double max_residual = 0.0;
  double tolerance = 0.0;      // kappa (rho r^3 + nu)
  double grad_budget = 0.0;    // certified |g - grad F| bound of the fit
  double hess_budget = 0.0;    // certified |H - hess F| bound of the fit
  bool ill_conditioned = false;
};

/// Solves the local quadratic-model feasibility program at x by least
/// squares over the probe constraints and verifies every constraint within
/// kappa (rho r^3 + nu). Throws when the probe system is ill-conditioned
/// (denser sphere cover needed).
FeasibilityResult feasibility_probe(QueryInterface& oracle, const Eigen::VectorXd& x,
                                    double r_probe, const ProbeGeometry& geometry,
                                    double nu, double rho, double kappa = 6.0);

/// Enumeration variant: scans explicit (g, H) covers instead of fitting.
std::optional<FeasibilityResult> feasibility_probe_enumerated(
    QueryInterface& oracle, const Eigen::VectorXd& x, double r_probe,
    const ProbeGeometry& geometry, double nu, double rho, double kappa,
    double g_radius, double g_resolution, double h_radius, double h_resolution,
    double accept_grad, double accept_min_eig);

struct SearchOptions {
  double cover_radius = -1.0;  // default B/eps
  double probe_radius = -1.0;  // default c_prime sqrt(eps/rho)
  double c_prime = 0.5;
  double eps_prime = 0.1;
  double kappa = 6.0;
  long cover_cap = 10'000'000;
  bool pure_enumeration = false;  // d = 1 fidelity mode
};

struct SearchResult {
  Eigen::VectorXd x;
  FeasibilityResult fit;
  long index = 0;            // cover index of the accepted point
  long probes_run = 0;       // cover points probed before acceptance
  double accept_grad = 0.0;  // gradient-norm acceptance threshold used
  double accept_min_eig = 0.0;
  bool in_guarantee_regime = true;  // nu within the certified tolerance range
};

/// Scans the ball cover in index order and returns the first point whose
/// fitted local model is feasible with small gradient and benign curvature.
/// Acceptance thresholds are 2 eps and -2 sqrt(rho eps), tightened by the
/// probe's certified error budgets so an accepted point verifies at
/// (2 eps, rho). Exhausting the cover throws (the declared B, ell, rho, nu
/// are inconsistent with the existence of a stationary point).
SearchResult exhaustive_sosp_search(QueryInterface& oracle, int d, double eps,
                                    double ell, double rho, double bound_B, double nu,
                                    const SearchOptions& opts = {});

}  // namespace sosp
