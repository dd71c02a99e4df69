#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sosp/oracle.hpp"
#include "sosp/rng.hpp"
#include "sosp/smoothing.hpp"
#include "sosp/stationarity.hpp"

namespace sosp {

/// Hyperparameters for the perturbed-SGD family, plus the declared
/// regularity of the target. `default_config` fills the derived schedule;
/// all fields may be overridden afterwards.
struct OptimizerConfig {
  double eta = 0.1;             // learning rate
  double perturb_radius = 0.0;  // uniform-ball perturbation radius r
  double sigma = 0.0;           // smoothing radius (0 for psgd / gd)
  long batch = 1;               // mini-batch size m
  long max_iters = 100;         // step count T
  double epsilon = 0.1;         // target accuracy
  double ell = 1.0;             // gradient-Lipschitz bound of the target
  double rho = 1.0;             // Hessian-Lipschitz bound of the target
  double bound_B = 1.0;         // value bound of the target
  double delta = 0.1;           // confidence parameter
  std::uint64_t seed = 0;

  // Schedule knobs and derived bookkeeping (informational).
  double schedule_c = 3.0;       // "large enough constant" of the schedule
  long batch_cap = 10000;        // desk-scale ceiling on m
  long iter_cap = 100000;        // desk-scale ceiling on T
  double chi = 1.0;              // log factor of the schedule
  double escape_steps = 0.0;     // curvature-escape step budget
  double escape_drop = 0.0;      // required value drop after an escape
  long batch_theoretical = 0;    // m before capping
  long iters_theoretical = 0;    // T before capping

  void validate() const;  // throws on violated invariants
};

/// Derived schedule:
///   sigma = sqrt(eps/(rho d)),  eta = 1/ell,  r = eps chi^-3 c^-6,
///   chi = max(1, log(d ell (2B) / (rho eps delta))),
///   T = ceil(2 (2B) chi^4 ell / eps^2)  capped at iter_cap,
///   m from the mini-batch concentration rule with lambda = chi c and
///   sub-Gaussian parameter B/sigma, capped at batch_cap.
/// Theoretical (uncapped) m and T are kept in the config.
OptimizerConfig default_config(int d, double epsilon, double ell, double rho,
                               double bound_B, double delta, double schedule_c = 3.0,
                               long batch_cap = 10000, long iter_cap = 100000);

struct StepDiagnostics {
  double grad_est_norm = 0.0;
  double perturb_norm = 0.0;
};

/// Full trajectory of one optimizer run.
struct RunRecord {
  std::vector<Eigen::VectorXd> iterates;  // x_0 ... x_T
  std::vector<double> values;             // optional probes; empty unless recorded
  std::vector<StepDiagnostics> steps;
  std::uint64_t queries_used = 0;
  std::optional<StationarityReport> terminal;
  bool early_stopped = false;

  long steps_taken() const { return static_cast<long>(steps.size()); }
  const Eigen::VectorXd& final_iterate() const { return iterates.back(); }
};

/// Test-harness-only early stop: check the truth verifier every `stride`
/// steps and stop once it passes.
struct EarlyStop {
  const TruthView* truth = nullptr;
  double eps = 0.0;
  double rho = 0.0;
  long stride = 10;
};

/// Zeroth-order perturbed SGD: x <- x - eta (g + xi) with g the mini-batch
/// smoothing gradient estimate and xi uniform in the ball of radius r.
/// Runs exactly max_iters steps (T (m+1) value queries) unless early-stopped.
RunRecord zpsgd(QueryInterface& oracle, const Eigen::VectorXd& x0,
                const OptimizerConfig& cfg, RngStream& rng,
                const EarlyStop* early_stop = nullptr);

/// First-order variant: g is the mean of m gradient queries at
/// Gaussian-perturbed points. T m gradient queries.
RunRecord fpsgd(QueryInterface& oracle, const Eigen::VectorXd& x0,
                const OptimizerConfig& cfg, RngStream& rng,
                const EarlyStop* early_stop = nullptr);

/// Stochastic gradient sampler: unbiased for the target gradient.
using GradSampler = std::function<Eigen::VectorXd(const Eigen::VectorXd&, RngStream&)>;

/// Mini-batch perturbed SGD over a caller-supplied stochastic gradient.
RunRecord psgd(const GradSampler& sampler, const Eigen::VectorXd& x0,
               const OptimizerConfig& cfg, RngStream& rng,
               const EarlyStop* early_stop = nullptr);

/// Plain gradient descent on f (control arm). T gradient queries.
RunRecord gd_baseline(QueryInterface& oracle, const Eigen::VectorXd& x0, double eta,
                      long max_iters);

}  // namespace sosp
