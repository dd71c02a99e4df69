#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "sosp/harness.hpp"
#include "sosp/relu.hpp"
#include "sosp/rng.hpp"
#include "sosp/stationarity.hpp"

using namespace sosp;

namespace {

TruthView quadratic_truth(int d) {
  TruthView t;
  t.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  t.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
  t.hess = [d](const Eigen::VectorXd&) {
    return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
  };
  return t;
}

}  // namespace

TEST_CASE("verdicts at simple landscapes") {
  SUBCASE("bowl minimum passes") {
    const auto rep = check_sosp(quadratic_truth(2), Eigen::VectorXd::Zero(2), 0.1, 1.0);
    CHECK(rep.grad_norm == doctest::Approx(0.0));
    CHECK(rep.min_eig == doctest::Approx(2.0));
    CHECK(rep.verdict);
    CHECK(rep.method == DerivativeMethod::Analytic);
  }
  SUBCASE("exact saddle fails on curvature") {
    TruthView t;
    t.value = [](const Eigen::VectorXd& x) { return x[0] * x[0] - x[1] * x[1]; };
    t.grad = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(2);
      g << 2.0 * x[0], -2.0 * x[1];
      return g;
    };
    t.hess = [](const Eigen::VectorXd&) {
      Eigen::MatrixXd H(2, 2);
      H << 2.0, 0.0, 0.0, -2.0;
      return H;
    };
    const auto rep = check_sosp(t, Eigen::VectorXd::Zero(2), 0.1, 1.0);
    CHECK(rep.min_eig == doctest::Approx(-2.0));
    CHECK(!rep.verdict);
  }
  SUBCASE("threshold arithmetic at the boundary") {
    // grad 0.05, min eig -0.2 against eps 0.1, rho 1: -0.2 >= -sqrt(0.1).
    TruthView t;
    t.value = [](const Eigen::VectorXd& x) {
      return 0.05 * x[0] - 0.1 * x[1] * x[1];
    };
    t.grad = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(2);
      g << 0.05, -0.2 * x[1];
      return g;
    };
    t.hess = [](const Eigen::VectorXd&) {
      Eigen::MatrixXd H(2, 2);
      H << 0.0, 0.0, 0.0, -0.2;
      return H;
    };
    const auto rep = check_sosp(t, Eigen::VectorXd::Zero(2), 0.1, 1.0);
    CHECK(rep.grad_norm == doctest::Approx(0.05));
    CHECK(rep.verdict);
  }
}

TEST_CASE("verdict is monotone in the tolerances") {
  FunctionPairOracle pair = make_double_well_pair(2, 0.0, 1e-3);
  RngStream rng(3, 0);
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd x = rng.uniform_ball(2, 1.5);
    for (double eps : {0.05, 0.2, 0.8}) {
      for (double rho : {1.0, 10.0}) {
        const bool base = check_sosp(pair.truth(), x, eps, rho).verdict;
        if (!base) continue;
        CHECK(check_sosp(pair.truth(), x, eps * 2, rho).verdict);
        CHECK(check_sosp(pair.truth(), x, eps, rho * 3).verdict);
      }
    }
  }
}

TEST_CASE("matrix-free smallest eigenvalue") {
  SUBCASE("diagonal oracle") {
    Eigen::VectorXd diag(3);
    diag << 2.0, -1.0, 5.0;
    auto hvp = [diag](const Eigen::VectorXd& u) {
      return Eigen::VectorXd(diag.cwiseProduct(u));
    };
    CHECK(min_eig_matrix_free(hvp, 3, 1e-10) == doctest::Approx(-1.0).epsilon(1e-8));
  }
  SUBCASE("identity") {
    auto hvp = [](const Eigen::VectorXd& u) { return u; };
    CHECK(min_eig_matrix_free(hvp, 4, 1e-10) == doctest::Approx(1.0));
  }
  SUBCASE("random symmetric matrix against the dense solver") {
    RngStream rng(17, 0);
    const int d = 32;
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = rng.next_gaussian();
    const Eigen::MatrixXd H = 0.5 * (A + A.transpose());
    auto hvp = [&H](const Eigen::VectorXd& u) { return Eigen::VectorXd(H * u); };
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double want = es.eigenvalues().minCoeff();
    CHECK(std::abs(min_eig_matrix_free(hvp, d, 1e-10) - want) <= 1e-6);
  }
  SUBCASE("iteration cap reports the residual") {
    RngStream rng(19, 0);
    const int d = 60;
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = rng.next_gaussian();
    const Eigen::MatrixXd H = 0.5 * (A + A.transpose());
    auto hvp = [&H](const Eigen::VectorXd& u) { return Eigen::VectorXd(H * u); };
    CHECK_THROWS(min_eig_matrix_free(hvp, d, 1e-14, 3));
  }
}

TEST_CASE("finite differences") {
  SUBCASE("quadratic gradient") {
    auto F = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    const Eigen::VectorXd g = finite_diff_grad(F, x, 1e-5);
    CHECK(std::abs(g[0] - 2.0) <= 1e-8);
    CHECK(std::abs(g[1] - 4.0) <= 1e-8);
  }
  SUBCASE("constant function") {
    auto F = [](const Eigen::VectorXd&) { return 3.0; };
    CHECK(finite_diff_grad(F, Eigen::VectorXd::Zero(3), 1e-5).norm() == 0.0);
  }
  SUBCASE("sine at the origin") {
    auto F = [](const Eigen::VectorXd& x) { return std::sin(x[0]); };
    const Eigen::VectorXd g = finite_diff_grad(F, Eigen::VectorXd::Zero(2), 3e-5);
    CHECK(std::abs(g[0] - 1.0) <= 1e-9);
    CHECK(std::abs(g[1]) <= 1e-12);
  }
  SUBCASE("rejects nonpositive step") {
    auto F = [](const Eigen::VectorXd&) { return 0.0; };
    CHECK_THROWS(finite_diff_grad(F, Eigen::VectorXd::Zero(1), 0.0));
  }
}

TEST_CASE("analytic derivatives agree with finite differences") {
  SUBCASE("double-well target") {
    FunctionPairOracle pair = make_double_well_pair(2, 0.0, 1e-3);
    const auto& t = pair.truth();
    RngStream rng(23, 0);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = rng.uniform_ball(2, 1.5);
      const Eigen::VectorXd ga = t.grad(x);
      const Eigen::VectorXd gf = finite_diff_grad(t.value, x, 1e-5);
      CHECK((ga - gf).norm() <= 1e-5 * std::max(1.0, ga.norm()));
      const Eigen::MatrixXd Ha = t.hess(x);
      const Eigen::MatrixXd Hf = finite_diff_hess_from_grad(t.grad, x, 1e-5);
      CHECK((Ha - Hf).cwiseAbs().maxCoeff() <= 1e-3 * std::max(1.0, Ha.norm()));
    }
  }
  SUBCASE("relu population risk away from alignment") {
    RngStream rng(29, 0);
    Eigen::VectorXd w_star = rng.unit_sphere(3);
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd w = sample_region(w_star, rng);
      if ((w / w.norm() - w_star).norm() < 0.3) continue;  // grad check needs theta > 0
      const Eigen::VectorXd ga = population_grad(w, w_star);
      auto F = [&](const Eigen::VectorXd& v) { return population_risk(v, w_star); };
      const Eigen::VectorXd gf = finite_diff_grad(F, w, 1e-6);
      CHECK((ga - gf).norm() <= 1e-5 * std::max(1.0, ga.norm()));
      const Eigen::MatrixXd Ha = population_hess(w, w_star);
      auto G = [&](const Eigen::VectorXd& v) { return population_grad(v, w_star); };
      const Eigen::MatrixXd Hf = finite_diff_hess_from_grad(G, w, 1e-5);
      CHECK((Ha - Hf).cwiseAbs().maxCoeff() <= 1e-3);
    }
  }
}

TEST_CASE("large dimension uses the matrix-free path") {
  const int d = 100;
  RngStream rng(31, 0);
  Eigen::VectorXd diag(d);
  for (int i = 0; i < d; ++i) diag[i] = 0.5 + rng.next_uniform();
  diag[7] = -0.05;
  TruthView t;
  t.value = [diag](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(diag.cwiseProduct(x));
  };
  t.grad = [diag](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(diag.cwiseProduct(x));
  };
  t.hvp = [diag](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(diag.cwiseProduct(u));
  };
  const auto rep = check_sosp(t, Eigen::VectorXd::Zero(d), 0.1, 1.0);
  CHECK(rep.method == DerivativeMethod::MatrixFree);
  CHECK(rep.min_eig == doctest::Approx(-0.05).epsilon(1e-6));
  CHECK(rep.verdict);  // -0.05 >= -sqrt(0.1)
}

TEST_CASE("non-finite derivatives are flagged") {
  TruthView t;
  t.value = [](const Eigen::VectorXd&) { return 0.0; };
  t.grad = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(2, std::nan("")));
  };
  t.hess = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2));
  };
  const auto rep = check_sosp(t, Eigen::VectorXd::Zero(2), 0.1, 1.0);
  CHECK(!rep.derivatives_finite);
  CHECK(!rep.verdict);
}
