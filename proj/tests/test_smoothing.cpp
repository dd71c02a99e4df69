#include <doctest.h>

#include <cmath>
#include <vector>

#include "sosp/harness.hpp"
#include "sosp/oracle.hpp"
#include "sosp/rng.hpp"
#include "sosp/smoothing.hpp"

using namespace sosp;

namespace {

FunctionPairOracle constant_pair(int d, double c) {
  return make_pair(d, [c](const Eigen::VectorXd&) { return c; }, 0.0);
}

FunctionPairOracle linear_pair(const Eigen::VectorXd& a) {
  return make_pair(static_cast<int>(a.size()),
                   [a](const Eigen::VectorXd& x) { return a.dot(x); }, 0.0);
}

double slope_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("grad_sample closed forms") {
  SUBCASE("constant function gives the zero vector") {
    FunctionPairOracle o = constant_pair(3, 4.2);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(3), z(3);
    z << 0.3, -0.7, 1.1;
    CHECK(grad_sample(o, x, z, 0.5).norm() == 0.0);
    CHECK(o.queries() == 2);
  }
  SUBCASE("linear function, sigma one") {
    Eigen::VectorXd a(2);
    a << 2.0, -1.0;
    FunctionPairOracle o = linear_pair(a);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2), z(2);
    z << 0.4, 0.9;
    const Eigen::VectorXd g = grad_sample(o, x, z, 1.0);
    const Eigen::VectorXd want = z * a.dot(z);
    CHECK((g - want).norm() <= 1e-14);
  }
  SUBCASE("quadratic hand evaluation") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2), z(2);
    x << 1.0, 0.0;
    z << 0.5, 0.5;
    const Eigen::VectorXd g = grad_sample(o, x, z, 1.0);
    CHECK(g[0] == doctest::Approx(0.75));
    CHECK(g[1] == doctest::Approx(0.75));
  }
  SUBCASE("rejects nonpositive sigma") {
    FunctionPairOracle o = make_quadratic_pair(2);
    CHECK_THROWS(grad_sample(o, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), 0.0));
  }
}

TEST_CASE("grad_estimate is unbiased for the smoothed gradient") {
  SUBCASE("quadratic: smoothed gradient equals 2x") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2);
    x << 1.0, -1.0;
    RngStream rng(4242, 0);
    const Eigen::VectorXd g = grad_estimate(o, x, {0.1, 1'000'000}, rng);
    CHECK(std::abs(g[0] - 2.0) <= 0.01);
    CHECK(std::abs(g[1] + 2.0) <= 0.01);
    CHECK(o.queries() == 1'000'001);  // f(x) shared across the batch
  }
  SUBCASE("constant function gives exactly zero for any batch") {
    FunctionPairOracle o = constant_pair(2, -3.0);
    RngStream rng(1, 0);
    CHECK(grad_estimate(o, Eigen::VectorXd::Ones(2), {0.3, 57}, rng).norm() == 0.0);
  }
  SUBCASE("batch of one reduces to grad_sample with a shared center value") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2);
    x << 0.4, 0.6;
    RngStream rng(9, 0);
    const Eigen::VectorXd g = grad_estimate(o, x, {0.2, 1}, rng);
    RngStream replay(9, 0);
    const Eigen::VectorXd z = replay.gaussian_vector(2, 0.2);
    FunctionPairOracle o2 = make_quadratic_pair(2);
    const Eigen::VectorXd want = grad_sample(o2, x, z, 0.2);
    CHECK((g - want).norm() <= 1e-13);
  }
  SUBCASE("degree-two polynomial: estimator mean matches the analytic value") {
    // For quadratics the smoothed gradient coincides with the gradient.
    auto f = [](const Eigen::VectorXd& x) {
      return x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] + 2.0;
    };
    FunctionPairOracle o = make_pair(2, f, 0.0);
    Eigen::VectorXd x(2);
    x << 0.3, 0.7;
    Eigen::VectorXd want(2);
    want << 2.0 * x[0] + 3.0 * x[1], 3.0 * x[0] - 1.0;
    RngStream rng(77, 0);
    const Eigen::VectorXd g = grad_estimate(o, x, {0.2, 1'000'000}, rng);
    CHECK((g - want).cwiseAbs().maxCoeff() <= 0.012);
  }
  SUBCASE("rejects empty batches") {
    FunctionPairOracle o = make_quadratic_pair(2);
    RngStream rng(3, 0);
    CHECK_THROWS(grad_estimate(o, Eigen::VectorXd::Zero(2), {0.1, 0}, rng));
  }
}

TEST_CASE("smoothed value estimate") {
  SUBCASE("quadratic at the origin picks up d sigma^2") {
    FunctionPairOracle o = make_quadratic_pair(3);
    RngStream rng(5150, 0);
    const double v = smoothed_value_estimate(o, Eigen::VectorXd::Zero(3),
                                             {1.0, 1'000'000}, rng);
    CHECK(v >= 2.97);
    CHECK(v <= 3.03);
  }
  SUBCASE("constant function is exact") {
    FunctionPairOracle o = constant_pair(2, 1.5);
    RngStream rng(1, 0);
    CHECK(smoothed_value_estimate(o, Eigen::VectorXd::Zero(2), {0.7, 123}, rng) ==
          doctest::Approx(1.5));
  }
  SUBCASE("linear function: odd moments cancel") {
    Eigen::VectorXd a(2);
    a << 1.0, 2.0;
    FunctionPairOracle o = linear_pair(a);
    Eigen::VectorXd x(2);
    x << 0.5, -0.25;
    RngStream rng(6, 0);
    const double v = smoothed_value_estimate(o, x, {0.5, 1'000'000}, rng);
    // 4 * stderr with per-sample variance |a|^2 sigma^2.
    const double tol = 4.0 * std::sqrt(a.squaredNorm() * 0.25 / 1e6);
    CHECK(std::abs(v - a.dot(x)) <= tol);
  }
}

TEST_CASE("smoothed Hessian estimate") {
  SUBCASE("quadratic recovers twice the identity") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2);
    x << 0.3, -0.2;
    RngStream rng(31337, 0);
    const Eigen::MatrixXd H = smoothed_hessian_estimate(o, x, {0.5, 10'000'000}, rng);
    CHECK(std::abs(H(0, 0) - 2.0) <= 0.05);
    CHECK(std::abs(H(1, 1) - 2.0) <= 0.05);
    CHECK(std::abs(H(0, 1)) <= 0.05);
  }
  SUBCASE("constant function vanishes in expectation") {
    FunctionPairOracle o = constant_pair(2, 3.0);
    RngStream rng(8, 0);
    const Eigen::MatrixXd H =
        smoothed_hessian_estimate(o, Eigen::VectorXd::Zero(2), {1.0, 100'000}, rng);
    CHECK(H.cwiseAbs().maxCoeff() <= 0.06);
  }
  SUBCASE("output is exactly symmetric") {
    FunctionPairOracle o = make_quadratic_pair(3);
    RngStream rng(9, 0);
    const Eigen::MatrixXd H =
        smoothed_hessian_estimate(o, Eigen::VectorXd::Ones(3), {0.5, 1000}, rng);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("first-order smoothing estimator") {
  SUBCASE("gradient field 2x at a fixed point") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    RngStream rng(2024, 0);
    const Eigen::VectorXd g = fpsgd_grad_estimate(o, x, {0.1, 100'000}, rng);
    CHECK(std::abs(g[0] - 2.0) <= 0.01);
    CHECK(std::abs(g[1]) <= 0.01);
    CHECK(o.queries() == 100'000);  // gradient queries only
  }
  SUBCASE("constant gradient field is exact for any batch") {
    Eigen::VectorXd a(2);
    a << -1.0, 2.0;
    FunctionPairOracle o = linear_pair(a);
    o.set_grad([a](const Eigen::VectorXd&) { return a; });
    RngStream rng(3, 0);
    const Eigen::VectorXd g =
        fpsgd_grad_estimate(o, Eigen::VectorXd::Zero(2), {0.4, 33}, rng);
    CHECK((g - a).norm() <= 1e-14);
  }
  SUBCASE("batch of one is a single perturbed gradient") {
    FunctionPairOracle o = make_quadratic_pair(2);
    Eigen::VectorXd x(2);
    x << 0.5, 0.5;
    RngStream rng(12, 0);
    const Eigen::VectorXd g = fpsgd_grad_estimate(o, x, {0.2, 1}, rng);
    RngStream replay(12, 0);
    const Eigen::VectorXd z = replay.gaussian_vector(2, 0.2);
    CHECK((g - 2.0 * (x + z)).norm() <= 1e-15);
  }
  SUBCASE("requires a gradient query") {
    FunctionPairOracle o = constant_pair(2, 0.0);
    RngStream rng(4, 0);
    CHECK_THROWS(fpsgd_grad_estimate(o, Eigen::VectorXd::Zero(2), {0.1, 4}, rng));
  }
}

TEST_CASE("estimator tails are sub-Gaussian at the value-bound scale") {
  // Bounded surrogate: sup |f| = B/2, so increments stay within B.
  const double B = 2.0, sigma = 0.5;
  auto f = [B](const Eigen::VectorXd& x) { return 0.5 * B * std::sin(x[0]); };
  FunctionPairOracle o = make_pair(2, f, 0.0);
  Eigen::VectorXd x(2), u(2);
  x << 0.4, -0.2;
  u << 1.0, 0.0;
  RngStream rng(1001, 0);
  const long n = 100'000;
  long over[3] = {0, 0, 0};
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd z = rng.gaussian_vector(2, sigma);
    FunctionPairOracle probe = make_pair(2, f, 0.0);
    const double inner = u.dot(grad_sample(probe, x, z, sigma));
    for (int k = 1; k <= 3; ++k)
      if (std::abs(inner) > k * B / sigma) ++over[k - 1];
  }
  for (int k = 1; k <= 3; ++k) {
    const double bound = 2.0 * std::exp(-0.5 * k * k);
    const double frac = static_cast<double>(over[k - 1]) / n;
    const double slack = 4.0 * std::sqrt(std::min(1.0, bound) / n);
    CHECK(frac <= bound + slack);
  }
}

TEST_CASE("mini-batch variance decays like one over m") {
  FunctionPairOracle o = make_quadratic_pair(2);
  Eigen::VectorXd x(2);
  x << 1.0, -1.0;
  std::vector<double> logm, logvar;
  const int reps = 120;
  for (long m : {10L, 100L, 1000L, 10'000L}) {
    double s = 0.0, ss = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rng(555, static_cast<std::uint64_t>(100 * m + r));
      const double g0 = grad_estimate(o, x, {0.1, m}, rng)[0];
      s += g0;
      ss += g0 * g0;
    }
    const double var = ss / reps - (s / reps) * (s / reps);
    logm.push_back(std::log(static_cast<double>(m)));
    logvar.push_back(std::log(var));
  }
  const double slope = slope_fit(logm, logvar);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("smoothing deviation bounds hold") {
  SUBCASE("exact pair, quadratic target: only Monte Carlo noise remains") {
    FunctionPairOracle o = make_quadratic_pair(2);
    RngStream rng(77, 0);
    const auto rep = verify_smoothing_bounds(o, 0.0, 0.0, 0.3, 10, 200'000, 1.5, rng);
    CHECK(rep.ok());
    CHECK(rep.grad_bound == 0.0);
  }
  SUBCASE("cosine perturbation against the explicit constants") {
    const double nu = 0.1, sigma = 0.5, tau = sigma / 4.0;
    auto F = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    TruthView truth;
    truth.value = F;
    truth.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    truth.hess = [](const Eigen::VectorXd&) {
      return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(1, 1));
    };
    auto f = [F, nu, tau](const Eigen::VectorXd& x) {
      return F(x) + nu * std::cos(x[0] / tau);
    };
    FunctionPairOracle o = make_pair(1, f, std::move(truth), nu);
    RngStream rng(78, 0);
    const auto rep = verify_smoothing_bounds(o, nu, 0.0, sigma, 20, 200'000, 2.0, rng);
    CHECK(rep.ok());
    CHECK(rep.max_grad_dev <= rep.grad_bound + 0.05);
  }
}
