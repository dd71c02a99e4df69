#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>

#include <Eigen/Core>

#include "sosp/rng.hpp"

namespace sosp {

/// The only surface an optimizer may touch: value (and, when present,
/// gradient) queries of the surrogate f, with exact query accounting.
/// The hidden target F lives behind FunctionPairOracle::truth(), which
/// optimizer signatures never receive.
class QueryInterface {
 public:
  virtual ~QueryInterface() = default;

  virtual int dim() const = 0;

  /// f(x). Increments the query counter by exactly 1.
  virtual double value(const Eigen::VectorXd& x) = 0;

  virtual bool has_grad() const = 0;

  /// grad f(x). Increments the query counter by exactly 1.
  virtual Eigen::VectorXd grad(const Eigen::VectorXd& x) = 0;

  /// f at each column of `points`. Counter increases by points.cols().
  virtual Eigen::VectorXd value_batch(const Eigen::Ref<const Eigen::MatrixXd>& points) = 0;

  virtual std::uint64_t queries() const = 0;
};

/// Privileged evaluator of the target F: function value plus optional
/// analytic derivatives. Verification and experiment code only.
struct TruthView {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // may be empty
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;  // may be empty
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      hvp;  // may be empty
};

/// Declared regularity of the hidden target (upper bounds; NaN = undeclared).
struct Regularity {
  double bound_B = std::numeric_limits<double>::quiet_NaN();
  double ell = std::numeric_limits<double>::quiet_NaN();
  double rho = std::numeric_limits<double>::quiet_NaN();
};

class FunctionPairOracle final : public QueryInterface {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using BatchFn =
      std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>;

  /// Rejects dim == 0 and nu < 0.
  FunctionPairOracle(int dim, ValueFn f, double nu);

  FunctionPairOracle(FunctionPairOracle&& other) noexcept
      : dim_(other.dim_),
        f_(std::move(other.f_)),
        grad_f_(std::move(other.grad_f_)),
        f_batch_(std::move(other.f_batch_)),
        truth_(std::move(other.truth_)),
        reg_(other.reg_),
        nu_(other.nu_),
        queries_(other.queries_.load(std::memory_order_relaxed)) {}
  FunctionPairOracle(const FunctionPairOracle&) = delete;
  FunctionPairOracle& operator=(const FunctionPairOracle&) = delete;
  FunctionPairOracle& operator=(FunctionPairOracle&&) = delete;

  void set_grad(GradFn g) { grad_f_ = std::move(g); }
  void set_batch(BatchFn fb) { f_batch_ = std::move(fb); }
  void set_truth(TruthView t) { truth_ = std::make_shared<TruthView>(std::move(t)); }
  void set_regularity(Regularity r) { reg_ = r; }

  int dim() const override { return dim_; }
  double value(const Eigen::VectorXd& x) override;
  bool has_grad() const override { return static_cast<bool>(grad_f_); }
  Eigen::VectorXd grad(const Eigen::VectorXd& x) override;
  Eigen::VectorXd value_batch(const Eigen::Ref<const Eigen::MatrixXd>& points) override;
  std::uint64_t queries() const override { return queries_.load(std::memory_order_relaxed); }

  void reset_counter() { queries_.store(0, std::memory_order_relaxed); }

  double nu() const { return nu_; }
  const Regularity& regularity() const { return reg_; }

  bool has_truth() const { return truth_ != nullptr; }
  const TruthView& truth() const;

 private:
  int dim_;
  ValueFn f_;
  GradFn grad_f_;
  BatchFn f_batch_;
  std::shared_ptr<TruthView> truth_;
  Regularity reg_;
  double nu_;
  std::atomic<std::uint64_t> queries_{0};
};

/// Oracle over (f, optionally F). truth_view populated iff a truth value
/// function is supplied. Counter starts at zero.
FunctionPairOracle make_pair(int dim, FunctionPairOracle::ValueFn f_eval,
                             TruthView F_eval, double nu);
FunctionPairOracle make_pair(int dim, FunctionPairOracle::ValueFn f_eval, double nu);

void reset_counter(FunctionPairOracle& oracle);

struct ClosenessAudit {
  double max_abs_gap = 0.0;
  double declared_nu = 0.0;
  long samples = 0;
  bool ok = false;
  Eigen::VectorXd worst_point;
};

/// Samples the declared domain and checks max |f - F| <= nu.
ClosenessAudit closeness_audit(FunctionPairOracle& pair,
                               const std::function<Eigen::VectorXd(RngStream&)>& sample,
                               long n_samples, RngStream& rng);

}  // namespace sosp
