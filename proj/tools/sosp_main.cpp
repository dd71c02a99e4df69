// Command-line driver: one experiment per invocation, artifacts on disk.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sosp/harness.hpp"

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out = "experiment";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed (env SEED overrides)");
  cmd->add_option("--out", c.out, "output path stem");
}

// Collects only the flags the user actually passed, so the harness-side
// defaults and unknown-key validation stay authoritative.
class ParamSet {
 public:
  explicit ParamSet(CLI::App* cmd) : cmd_(cmd) {}

  void opt_int(const std::string& flag, const std::string& key, const std::string& help) {
    cmd_->add_option_function<long>(
        flag, [this, key](const long& v) { params_[key] = v; }, help);
  }
  void opt_double(const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd_->add_option_function<double>(
        flag, [this, key](const double& v) { params_[key] = v; }, help);
  }
  void opt_string(const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd_->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { params_[key] = v; }, help);
  }
  void opt_flag(const std::string& flag, const std::string& key, const std::string& help) {
    cmd_->add_flag_callback(
        flag, [this, key]() { params_[key] = true; }, help);
  }
  void opt_vec_double(const std::string& flag, const std::string& key,
                      const std::string& help) {
    cmd_->add_option_function<std::vector<double>>(
        flag, [this, key](const std::vector<double>& v) { params_[key] = v; }, help);
  }
  void opt_vec_long(const std::string& flag, const std::string& key,
                    const std::string& help) {
    cmd_->add_option_function<std::vector<long>>(
        flag, [this, key](const std::vector<long>& v) { params_[key] = v; }, help);
  }

  const nlohmann::json& params() const { return params_; }

 private:
  CLI::App* cmd_;
  nlohmann::json params_ = nlohmann::json::object();
};

void add_sgd_options(ParamSet& ps) {
  ps.opt_string("--pair", "pair", "function pair: quadratic | double-well | hard");
  ps.opt_int("--dim,-d", "dim", "ambient dimension");
  ps.opt_double("--eps", "eps", "target accuracy");
  ps.opt_double("--ell", "ell", "gradient-Lipschitz bound");
  ps.opt_double("--rho", "rho", "Hessian-Lipschitz bound");
  ps.opt_double("--B", "B", "value bound");
  ps.opt_double("--delta", "delta", "confidence parameter");
  ps.opt_double("--nu", "nu", "surrogate error bound");
  ps.opt_double("--tau", "tau", "ripple wavelength");
  ps.opt_double("--mu", "mu", "hard-instance bump sharpness");
  ps.opt_string("--variant", "variant", "hard-instance variant");
  ps.opt_int("--batch-m", "batch", "mini-batch size");
  ps.opt_int("--iters-T", "iters", "step count");
  ps.opt_double("--eta", "eta", "learning rate");
  ps.opt_double("--sigma", "sigma", "smoothing radius");
  ps.opt_double("--perturb-r", "perturb_r", "perturbation radius");
  ps.opt_vec_double("--x0", "x0", "start point");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-order stationary point toolkit"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "run an experiment spec from a JSON file");

  struct Sub {
    CLI::App* cmd;
    Common common;
    std::unique_ptr<ParamSet> ps;
    std::string kind;
  };
  std::vector<std::unique_ptr<Sub>> subs;

  auto make_sub = [&](const std::string& name, const std::string& kind,
                      const std::string& help) -> Sub& {
    auto sub = std::make_unique<Sub>();
    sub->cmd = app.add_subcommand(name, help);
    sub->kind = kind;
    add_common(sub->cmd, sub->common);
    sub->ps = std::make_unique<ParamSet>(sub->cmd);
    subs.push_back(std::move(sub));
    return *subs.back();
  };

  {
    auto& s = make_sub("run-zpsgd", "zpsgd-run", "zeroth-order perturbed SGD run");
    add_sgd_options(*s.ps);
  }
  {
    auto& s = make_sub("run-fpsgd", "fpsgd-run", "first-order perturbed SGD run");
    add_sgd_options(*s.ps);
  }
  {
    auto& s = make_sub("run-psgd", "psgd-run", "saddle-escape runs of mini-batch PSGD");
    s.ps->opt_double("--eps", "eps", "target accuracy");
    s.ps->opt_double("--rho", "rho", "Hessian-Lipschitz bound");
    s.ps->opt_double("--c", "c", "schedule constant");
    s.ps->opt_double("--neg-curv", "neg_curv", "saddle negative curvature");
    s.ps->opt_int("--seeds", "seeds", "number of seeded runs");
  }
  {
    auto& s = make_sub("hard-instance", "hard-instance",
                       "emit (and optionally audit) an adversarial pair");
    s.ps->opt_int("--d", "d", "dimension");
    s.ps->opt_double("--eps", "eps", "accuracy scale");
    s.ps->opt_double("--rho", "rho", "curvature scale");
    s.ps->opt_double("--mu", "mu", "bump sharpness");
    s.ps->opt_string("--variant", "variant", "polynomial-query | information-theoretic");
    s.ps->opt_flag("--audit", "audit", "run smoothness and band-gap audits");
    s.ps->opt_int("--samples", "samples", "audit sample count");
  }
  {
    auto& s = make_sub("relu-recovery", "relu-recovery", "target-recovery experiment");
    s.ps->opt_int("--d", "d", "dimension");
    s.ps->opt_int("--n", "n", "sample size");
    s.ps->opt_double("--eps", "eps", "recovery tolerance");
    s.ps->opt_int("--trials", "trials", "trial count");
    s.ps->opt_int("--iters-T", "iters", "optimizer steps");
    s.ps->opt_int("--batch-m", "batch", "mini-batch size");
    s.ps->opt_double("--ell-scale", "ell_scale", "declared ell = scale * sqrt(d)");
    s.ps->opt_flag("--control", "control", "optimize the analytic risk instead");
  }
  {
    auto& s = make_sub("relu-gap", "relu-gap", "uniform-convergence gap experiment");
    s.ps->opt_int("--d", "d", "dimension");
    s.ps->opt_vec_long("--n-list", "n_list", "sample sizes");
    s.ps->opt_int("--trials", "trials", "trials per sample size");
    s.ps->opt_int("--grid", "grid", "region grid size");
  }
  {
    auto& s = make_sub("concentration", "concentration",
                       "band-membership concentration experiment");
    s.ps->opt_int("--d", "d", "dimension");
    s.ps->opt_int("--trials", "trials", "direction draws");
  }
  {
    auto& s = make_sub("exp-search", "exp-search", "exhaustive certifier search");
    s.ps->opt_string("--pair", "pair", "quartic-ripple | double-well | quadratic");
    s.ps->opt_int("--dim,-d", "dim", "dimension (<= 3)");
    s.ps->opt_double("--eps", "eps", "target accuracy");
    s.ps->opt_double("--nu", "nu", "surrogate error");
    s.ps->opt_double("--tau", "tau", "ripple wavelength");
    s.ps->opt_double("--ell", "ell", "gradient-Lipschitz bound");
    s.ps->opt_double("--rho", "rho", "Hessian-Lipschitz bound");
    s.ps->opt_double("--B", "B", "value bound");
    s.ps->opt_double("--cover-radius", "cover_radius", "search-ball radius");
    s.ps->opt_double("--probe-radius", "probe_radius", "probe sphere radius");
    s.ps->opt_double("--kappa", "kappa", "feasibility tolerance constant");
    s.ps->opt_int("--cover-cap", "cover_cap", "cover cardinality cap");
    s.ps->opt_flag("--enumeration", "enumeration", "pure-enumeration fidelity mode");
  }
  {
    auto& s = make_sub("smoothing-audit", "smoothing-audit",
                       "smoothed-derivative deviation bounds");
    s.ps->opt_string("--pair", "pair", "cos | hard");
    s.ps->opt_int("--dim,-d", "dim", "dimension");
    s.ps->opt_double("--sigma", "sigma", "smoothing radius");
    s.ps->opt_int("--points", "points", "audited points");
    s.ps->opt_int("--inner", "inner", "Monte Carlo samples per point");
    s.ps->opt_double("--nu", "nu", "surrogate error");
    s.ps->opt_double("--tau", "tau", "ripple wavelength");
    s.ps->opt_double("--eps", "eps", "hard-instance accuracy scale");
    s.ps->opt_double("--rho", "rho", "declared Hessian-Lipschitz bound");
    s.ps->opt_double("--domain-radius", "domain_radius", "sampling radius");
  }
  {
    auto& s = make_sub("landscape-grid", "landscape-grid", "surface grid emission");
    s.ps->opt_string("--pair", "pair", "double-well | hard | relu | quadratic");
    s.ps->opt_double("--lo", "lo", "grid lower corner");
    s.ps->opt_double("--hi", "hi", "grid upper corner");
    s.ps->opt_int("--n", "n", "grid resolution per axis");
    s.ps->opt_double("--nu", "nu", "ripple amplitude");
    s.ps->opt_double("--tau", "tau", "ripple wavelength");
    s.ps->opt_double("--mu", "mu", "hard-instance bump sharpness");
    s.ps->opt_int("--relu-n", "relu_n", "dataset size for the relu surface");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      const auto spec = sosp::ExperimentSpec::from_json(sosp::read_json_file(config_path));
      return sosp::run(spec);
    }
    for (const auto& sub : subs) {
      if (sub->cmd->parsed()) {
        sosp::ExperimentSpec spec;
        spec.kind = sub->kind;
        spec.params = sub->ps->params();
        spec.seed = sub->common.seed;
        spec.output_path = sub->common.out;
        return sosp::run(spec);
      }
    }
    std::cerr << app.help() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
