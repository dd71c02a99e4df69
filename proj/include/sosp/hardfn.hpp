#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sosp/oracle.hpp"
#include "sosp/optim.hpp"
#include "sosp/rng.hpp"

namespace sosp {

/// Which surrogate accompanies the hard target: the polynomial-query
/// construction hides the special direction only inside the band, the
/// information-theoretic one hides it on the whole ball.
enum class HardVariant { PolynomialQuery, InformationTheoretic };

/// Parameters of the adversarial pair. The target is a periodic bump-plus-
/// bowl landscape whose only descent signal toward the minima lives along a
/// hidden unit direction v; the surrogate erases that signal on a region
/// covering all but a vanishing fraction of query space.
struct HardInstanceParams {
  int d = 2;
  double epsilon = 1.0;
  double rho = 1.0;
  double mu = 300.0;
  Eigen::VectorXd v;  // hidden unit direction
  HardVariant variant = HardVariant::PolynomialQuery;
  std::uint64_t seed = 0;
  std::string warning;  // set when mu is below the certified constant

  double scale_r() const { return std::sqrt(epsilon / rho); }
  double band_halfwidth() const;            // log(d)/sqrt(d)
  double ball_radius_scalefree() const { return 3.0 / mu; }
  double declared_nu() const;               // sup |f - F| bound for the variant
  void validate() const;
};

/// Draws the hidden direction from (seed) and validates parameters.
HardInstanceParams make_hard_instance(int d, double epsilon, double rho, double mu,
                                      HardVariant variant, std::uint64_t seed);

// Scalar bump polynomials (zero outside |x| < 1) and their derivatives.
double g1(double x);
double g2(double x);
double g1_d1(double x);
double g1_d2(double x);
double g2_d1(double x);
double g2_d2(double x);

/// Product bump h(y) = g1(mu v.y) g2(mu |y - (v.y) v|); |h| <= 1.
double h_value(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu);
Eigen::VectorXd h_grad(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu);
Eigen::MatrixXd h_hess(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double mu);

/// Coordinatewise reduction into the fundamental cube [-pi/2, pi/2]^d.
Eigen::VectorXd reduce_to_cube(const Eigen::VectorXd& x);

// Scale-free pair (epsilon = rho = 1) on reduced coordinates.
double sf_value(const Eigen::VectorXd& x_reduced, const Eigen::VectorXd& v, double mu);
Eigen::VectorXd sf_grad(const Eigen::VectorXd& x_reduced, const Eigen::VectorXd& v,
                        double mu);
Eigen::MatrixXd sf_hess(const Eigen::VectorXd& x_reduced, const Eigen::VectorXd& v,
                        double mu);

/// Scaled target and surrogate on all of R^d (periodic extension).
double hard_F(const Eigen::VectorXd& x, const HardInstanceParams& p);
Eigen::VectorXd hard_F_grad(const Eigen::VectorXd& x, const HardInstanceParams& p);
Eigen::MatrixXd hard_F_hess(const Eigen::VectorXd& x, const HardInstanceParams& p);
double hard_f(const Eigen::VectorXd& x, const HardInstanceParams& p);

/// Region of a point after reduction into the fundamental cube.
/// Ball = the informative part of the ball (band excluded);
/// Band and Padding make up the non-informative region.
enum class RegionLabel { Band, Ball, Padding };
RegionLabel classify(const Eigen::VectorXd& x, const HardInstanceParams& p);
bool non_informative(RegionLabel label);
std::string to_string(RegionLabel label);

/// Oracle over (hard_f, hard_F) with analytic truth derivatives and the
/// declared closeness/regularity constants.
FunctionPairOracle make_hard_oracle(const HardInstanceParams& p);

struct BandGapReport {
  long band_samples = 0;
  double max_gap_band = 0.0;
  double bound = 0.0;  // eps r min(1, 16 mu^2 log^2 d / d)
  long outside_samples = 0;
  double max_gap_outside = 0.0;  // must be exactly zero
  bool ok() const { return max_gap_band <= bound && max_gap_outside == 0.0; }
};

/// Samples the band and its complement; reports sup |f - F| on each side.
BandGapReport band_gap_audit(const HardInstanceParams& p, long n_samples,
                             RngStream& rng);

struct ConcentrationReport {
  int d = 0;
  long trials = 0;
  long misses = 0;  // draws of v under which the fixed point left the band
  double empirical = 0.0;
  double bound = 0.0;  // 2 exp(-(log d)^2 / 2)
  double slack = 0.0;  // 4 * binomial stderr at the bound
  bool ok() const { return empirical <= bound + slack; }
};

/// For a fixed ball point, draws `trials` hidden directions and measures how
/// often the point is informative.
ConcentrationReport fixed_point_concentration(int d, long trials, RngStream& rng);

/// Same experiment at a caller-chosen scale-free ball point.
ConcentrationReport fixed_point_concentration_at(const Eigen::VectorXd& x, long trials,
                                                 RngStream& rng);

struct SmoothnessAuditReport {
  long samples = 0;
  double max_abs_F_over_bound = 0.0;   // |F| / (1 + d)
  double max_abs_h = 0.0;              // against 1
  double max_h_grad_over_bound = 0.0;  // ||grad h|| / (3 mu)
  double max_hess_norm = 0.0;          // against 7e6
  double max_hess_lip_ratio = 0.0;     // against 2.8e10
  long no_sosp_checked = 0;
  long no_sosp_violations = 0;  // non-informative samples with small gradient
                                // and benign curvature
  long violations = 0;
  std::vector<Eigen::VectorXd> witnesses;
  bool ok() const { return violations == 0 && no_sosp_violations == 0; }
};

/// Finite-difference certificate sampling on the scale-free instance:
/// boundedness, gradient/Hessian norms, Hessian-Lipschitz ratios, and the
/// no-stationary-point margins on the non-informative region.
SmoothnessAuditReport smoothness_audit(const HardInstanceParams& p, long n_samples,
                                       RngStream& rng);

/// Optimizer driver restricted to the query interface.
using OracleOptimizer =
    std::function<RunRecord(QueryInterface&, const Eigen::VectorXd&, RngStream&)>;

struct AdaptiveQueryRun {
  long queries = 0;
  long noninformative_queries = 0;
  double terminal_grad_sf = 0.0;    // scale-free gradient norm at the end point
  double terminal_min_eig_sf = 0.0; // scale-free smallest Hessian eigenvalue
  bool certificate_sosp = false;    // passed the construction's margins
};

struct AdaptiveQueryReport {
  int runs = 0;
  int sosp_successes = 0;
  long total_queries = 0;
  long noninformative_queries = 0;
  double success_rate = 0.0;
  double noninformative_fraction = 0.0;
  std::vector<AdaptiveQueryRun> per_run;
};

/// Runs the optimizer against fresh hidden directions and records whether
/// queries ever became informative and whether the terminal point is a
/// stationary point of the target at the construction's certificate margins
/// (scale-free gradient below 1e-3 and smallest eigenvalue above -0.3).
AdaptiveQueryReport adaptive_query_experiment(const OracleOptimizer& run_optimizer,
                                              const HardInstanceParams& base,
                                              long query_budget, int v_draws,
                                              RngStream& rng);

/// Public descriptor (direction committed, not revealed) and secret file.
void write_instance_descriptor(const HardInstanceParams& p, const std::string& path);
void write_instance_secret(const HardInstanceParams& p, const std::string& path);
HardInstanceParams load_instance(const std::string& descriptor_path,
                                 const std::string& secret_path);
std::string direction_commitment(const Eigen::VectorXd& v);

}  // namespace sosp
