#include <doctest.h>

#include <thread>
#include <vector>

#include "sosp/hardfn.hpp"
#include "sosp/harness.hpp"
#include "sosp/oracle.hpp"

using namespace sosp;

TEST_CASE("identity pair evaluates and counts") {
  FunctionPairOracle o = make_quadratic_pair(2);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  CHECK(o.value(x) == doctest::Approx(2.0));
  CHECK(o.queries() == 1);
  CHECK(o.nu() == 0.0);
  CHECK(o.has_truth());
}

TEST_CASE("hard pair at the origin") {
  const auto p = make_hard_instance(4, 1.0, 1.0, 300.0, HardVariant::PolynomialQuery, 5);
  FunctionPairOracle o = make_hard_oracle(p);
  CHECK(o.value(Eigen::VectorXd::Zero(4)) == doctest::Approx(0.0));
  CHECK(o.queries() == 1);
}

TEST_CASE("value and gradient queries share one counter") {
  FunctionPairOracle o = make_quadratic_pair(3);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  o.value(x);
  o.value(x);
  o.value(x);
  o.grad(x);
  o.grad(x);
  CHECK(o.queries() == 5);
}

TEST_CASE("counter reset semantics") {
  FunctionPairOracle o = make_quadratic_pair(2);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  for (int i = 0; i < 17; ++i) o.value(x);
  CHECK(o.queries() == 17);
  reset_counter(o);
  CHECK(o.queries() == 0);
  reset_counter(o);
  CHECK(o.queries() == 0);
  o.value(x);
  CHECK(o.queries() == 1);
}

TEST_CASE("constructor rejects bad arguments") {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  CHECK_THROWS(FunctionPairOracle(0, f, 0.0));
  CHECK_THROWS(FunctionPairOracle(2, f, -0.1));
  FunctionPairOracle o(2, f, 0.0);
  CHECK_THROWS(o.grad(Eigen::VectorXd::Zero(2)));  // no gradient query configured
  CHECK_THROWS(o.truth());                         // no truth view
}

TEST_CASE("truth view populated only when supplied") {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  FunctionPairOracle bare = make_pair(2, f, 0.0);
  CHECK(!bare.has_truth());
  TruthView t;
  t.value = f;
  FunctionPairOracle with = make_pair(2, f, std::move(t), 0.0);
  CHECK(with.has_truth());
}

TEST_CASE("batch evaluation counts every point once") {
  FunctionPairOracle o = make_quadratic_pair(2);
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, 37);
  const Eigen::VectorXd vals = o.value_batch(pts);
  CHECK(o.queries() == 37);
  for (int j = 0; j < 37; ++j)
    CHECK(vals[j] == doctest::Approx(pts.col(j).squaredNorm()));
}

TEST_CASE("counter is exact under concurrent mini-batches") {
  FunctionPairOracle o = make_quadratic_pair(2);
  const int workers = 8, per_worker = 500;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&o] {
      const Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
      Eigen::MatrixXd batch = Eigen::MatrixXd::Ones(2, 5);
      for (int i = 0; i < per_worker; ++i) {
        o.value(x);
        o.value_batch(batch);
      }
    });
  for (auto& t : pool) t.join();
  CHECK(o.queries() == static_cast<std::uint64_t>(workers * per_worker * 6));
}

TEST_CASE("pointwise closeness audit on instances with truth") {
  RngStream rng(21, 0);

  SUBCASE("hard pair, polynomial-query variant") {
    const auto p =
        make_hard_instance(4, 1.0, 1.0, 300.0, HardVariant::PolynomialQuery, 77);
    FunctionPairOracle o = make_hard_oracle(p);
    const double cube = p.scale_r() * M_PI / 2.0;
    auto sampler = [cube, &p](RngStream& r) {
      Eigen::VectorXd x(p.d);
      for (int i = 0; i < p.d; ++i) x[i] = (2.0 * r.next_uniform() - 1.0) * cube;
      return x;
    };
    const auto audit = closeness_audit(o, sampler, 10'000, rng);
    CHECK(audit.ok);
  }

  SUBCASE("rippled double-well") {
    FunctionPairOracle o = make_double_well_pair(2, 0.01, 1e-3);
    auto sampler = [](RngStream& r) { return r.uniform_ball(2, 2.0); };
    const auto audit = closeness_audit(o, sampler, 10'000, rng);
    CHECK(audit.ok);
  }
}
