#include "sosp/oracle.hpp"

#include <stdexcept>

namespace sosp {

FunctionPairOracle::FunctionPairOracle(int dim, ValueFn f, double nu)
    : dim_(dim), f_(std::move(f)), nu_(nu) {
  if (dim <= 0) throw std::invalid_argument("FunctionPairOracle: dim must be positive");
  if (nu < 0.0) throw std::invalid_argument("FunctionPairOracle: nu must be nonnegative");
  if (!f_) throw std::invalid_argument("FunctionPairOracle: f is required");
}

double FunctionPairOracle::value(const Eigen::VectorXd& x) {
  queries_.fetch_add(1, std::memory_order_relaxed);
  return f_(x);
}

Eigen::VectorXd FunctionPairOracle::grad(const Eigen::VectorXd& x) {
  if (!grad_f_) throw std::logic_error("oracle has no gradient query");
  queries_.fetch_add(1, std::memory_order_relaxed);
  return grad_f_(x);
}

Eigen::VectorXd FunctionPairOracle::value_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const auto m = points.cols();
  queries_.fetch_add(static_cast<std::uint64_t>(m), std::memory_order_relaxed);
  if (f_batch_) return f_batch_(points);
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) out[j] = f_(points.col(j));
  return out;
}

const TruthView& FunctionPairOracle::truth() const {
  if (!truth_) throw std::logic_error("oracle carries no truth view");
  return *truth_;
}

FunctionPairOracle make_pair(int dim, FunctionPairOracle::ValueFn f_eval,
                             TruthView F_eval, double nu) {
  FunctionPairOracle o(dim, std::move(f_eval), nu);
  if (F_eval.value) o.set_truth(std::move(F_eval));
  return o;
}

FunctionPairOracle make_pair(int dim, FunctionPairOracle::ValueFn f_eval, double nu) {
  return FunctionPairOracle(dim, std::move(f_eval), nu);
}

void reset_counter(FunctionPairOracle& oracle) { oracle.reset_counter(); }

ClosenessAudit closeness_audit(FunctionPairOracle& pair,
                               const std::function<Eigen::VectorXd(RngStream&)>& sample,
                               long n_samples, RngStream& rng) {
  if (!pair.has_truth()) throw std::logic_error("closeness_audit: truth view required");
  ClosenessAudit audit;
  audit.declared_nu = pair.nu();
  audit.samples = n_samples;
  const auto& F = pair.truth().value;
  for (long i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd x = sample(rng);
    const double gap = std::abs(pair.value(x) - F(x));
    if (gap > audit.max_abs_gap) {
      audit.max_abs_gap = gap;
      audit.worst_point = x;
    }
  }
  audit.ok = audit.max_abs_gap <= audit.declared_nu + 1e-12;
  return audit;
}

}  // namespace sosp
