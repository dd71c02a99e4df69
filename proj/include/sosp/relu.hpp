#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sosp/oracle.hpp"
#include "sosp/rng.hpp"

namespace sosp {

/// Single-unit regression dataset: rows x_i ~ N(0, I),
/// y_i = relu(x_i . w_star) + unit Gaussian noise.
struct ReluInstance {
  int d = 0;
  long n = 0;
  Eigen::VectorXd w_star;  // empty when loaded from a committed dataset
  Eigen::MatrixXd X;       // n x d
  Eigen::VectorXd y;
  std::uint64_t seed = 0;

  bool has_target() const { return w_star.size() == d; }
};

ReluInstance make_relu_instance(int d, long n, const Eigen::VectorXd& w_star,
                                std::uint64_t seed);

/// Half squared loss averaged over the sample: (1/2n) sum (y_i - relu(x_i.w))^2.
double empirical_risk(const ReluInstance& inst, const Eigen::VectorXd& w);

/// Subgradient with the zero branch at the kink (relu'(0) = 0).
Eigen::VectorXd empirical_risk_grad(const ReluInstance& inst, const Eigen::VectorXd& w);

/// Empirical risk at each column of W (one matrix product per chunk).
Eigen::VectorXd empirical_risk_batch(const ReluInstance& inst,
                                     const Eigen::Ref<const Eigen::MatrixXd>& W);

/// E[relu(x.u) relu(x.v)] for x ~ N(0, I):
/// (1/2pi) |u| |v| (sin t + (pi - t) cos t), t the angle between u and v.
/// Rejects zero vectors.
double arc_cosine_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Closed-form population risk (textbook constant; see
/// empirical_risk_expectation for the quantity the empirical risk averages
/// to). Rejects w = 0, where the risk is nonsmooth.
double population_risk(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star);

/// Expected value of the half-loss empirical risk at fixed w. Differs from
/// population_risk by an additive constant only; gradients and Hessians
/// agree.
double empirical_risk_expectation(const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& w_star);

Eigen::VectorXd population_grad(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star);
Eigen::MatrixXd population_hess(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star);

/// Compact region {w . w_star >= 1/sqrt(d)} ∩ {|w| <= 2} that excludes the
/// nonsmooth point 0.
bool in_region(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star);
Eigen::VectorXd sample_region(const Eigen::VectorXd& w_star, RngStream& rng);

/// Oracle over (empirical risk, population expectation) with analytic truth
/// derivatives. nu is a measured closeness bound over the region.
FunctionPairOracle make_relu_oracle(std::shared_ptr<const ReluInstance> inst);

struct OnePointConvexityReport {
  long samples = 0;
  long violations = 0;
  double worst_margin = 0.0;  // min over samples of lhs - 0.1 |w - w*|^2
  Eigen::VectorXd witness;
  bool ok() const { return violations == 0; }
};

/// Checks <-grad R(w), w* - w> >= (1/10) |w - w*|^2 over sampled w in the
/// region.
OnePointConvexityReport one_point_convexity_audit(const Eigen::VectorXd& w_star,
                                                  long n_samples, RngStream& rng);

struct GapRow {
  long n = 0;
  double mean_sup_gap = 0.0;
};

struct UniformGapReport {
  int d = 0;
  int trials = 0;
  int grid_size = 0;
  std::vector<GapRow> rows;
  double loglog_slope = 0.0;  // fit of log gap against log n
};

/// For each sample size, measures sup over a fixed region grid of
/// |empirical risk - its expectation| on fresh datasets.
UniformGapReport uniform_gap_experiment(int d, const std::vector<long>& n_list,
                                        int trials, int grid_size, RngStream& rng);

struct RecoveryOptions {
  long iters = 150;
  long batch = 400;
  double ell_scale = 2.0;  // gradient-Lipschitz declared as ell_scale * sqrt(d)
  double delta = 0.1;
  double sigma_override = -1.0;  // > 0 replaces the derived smoothing radius
  bool population_control = false;  // optimize the analytic risk instead
};

struct RecoveryReport {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double containment = 0.0;  // fraction of iterates inside the region
  std::vector<double> final_dist;
};

/// Draws fresh targets and datasets, runs the zeroth-order optimizer on the
/// empirical risk from a random in-region start, and reports how often
/// |w_hat - w*| <= eps.
RecoveryReport relu_recovery_experiment(int d, long n, double eps, int trials,
                                        const RecoveryOptions& opt, RngStream& rng);

/// Binary matrix file (X then y) plus JSON metadata carrying a commitment to
/// the target instead of the target itself.
void save_relu_dataset(const ReluInstance& inst, const std::string& data_path,
                       const std::string& meta_path);
ReluInstance load_relu_dataset(const std::string& data_path,
                               const std::string& meta_path);

}  // namespace sosp
