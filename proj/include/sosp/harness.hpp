#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sosp/hardfn.hpp"
#include "sosp/oracle.hpp"
#include "sosp/optim.hpp"

namespace sosp {

/// One experiment: a kind, kind-specific parameters, a seed and an output
/// stem. Artifacts land at <output_path>.csv / .summary.json / .meta.json.
struct ExperimentSpec {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_path;

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
  /// Rebuilds the spec from the block echoed into a summary file.
  static ExperimentSpec from_summary(const nlohmann::json& summary);
};

/// Executes the experiment and writes its artifacts. The SEED environment
/// variable, when set, overrides the spec seed. Returns the process exit
/// status; on module errors a machine-readable error JSON is written to
/// <output_path>.error.json and a nonzero status returned.
int run(const ExperimentSpec& spec);

/// Known experiment kinds.
const std::vector<std::string>& experiment_kinds();

// ---------------------------------------------------------------------------
// Built-in function pairs used by the drivers and experiments.

/// f = F = |x|^2 with exact truth derivatives (nu = 0).
FunctionPairOracle make_quadratic_pair(int d);

/// Two-well target F(x) = (x1^2-1)^2 + sum_{i>1} x_i^2 plus a cosine ripple
/// surrogate of amplitude nu and wavelength tau, with analytic gradients on
/// both sides.
FunctionPairOracle make_double_well_pair(int d, double nu, double tau);
double double_well_value(const Eigen::VectorXd& x);

/// d = 1 quartic target with a cosine ripple surrogate and a seeded phase.
FunctionPairOracle make_quartic_ripple_pair(double nu, double tau, double phase);

// ---------------------------------------------------------------------------
// Experiment drivers shared by the CLI and the acceptance suite.

struct SaddleEscapeReport {
  int seeds = 0;
  int successes = 0;
  double required_drop = 0.0;  // value decrease that certifies an escape
  long steps = 0;              // escape step budget
  std::vector<double> best_drop;
};

/// Perturbed SGD with an exact-gradient sampler on the saddle quadratic
/// f(x) = (x1^2 - neg_curv x2^2)/2, started just off the saddle. Counts the
/// seeds whose value drops by the escape threshold within the escape budget.
SaddleEscapeReport saddle_escape_experiment(double eps, double rho, double c,
                                            double neg_curv, int seeds,
                                            std::uint64_t seed);

struct DoubleWellCompareReport {
  int runs = 0;
  int zpsgd_pass = 0;  // terminal point verifies against the target
  int gd_pass = 0;     // plain gradient descent on the surrogate
  std::vector<double> zpsgd_grad_norms;
  std::vector<double> gd_grad_norms;
};

struct DoubleWellCompareOptions {
  double eps = 0.1;
  double nu = 0.5 * std::pow(0.1, 1.5);
  double tau = 1e-3;
  long zpsgd_batch = 2000;
  long zpsgd_iters = 400;
  double gd_eta = 1e-4;
  long gd_iters = 20000;
  int runs = 20;
};

/// Same random starts for both arms: the smoothed zeroth-order method on the
/// rippled surrogate against plain gradient descent on it.
DoubleWellCompareReport double_well_compare(const DoubleWellCompareOptions& opt,
                                            std::uint64_t seed);

/// Writes a (x1, x2, F, f) grid CSV for surface plotting. The pair must be
/// two-dimensional.
void emit_landscape_grid(FunctionPairOracle& pair, double lo, double hi, int n,
                         const std::string& csv_path);

// Deterministic artifact helpers.
std::string format_double(double v);  // shortest round-trip decimal
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace sosp
