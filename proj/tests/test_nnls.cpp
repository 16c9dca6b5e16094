#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "thermap/nnls.hpp"

using namespace thermap;

namespace {

// Exhaustive oracle: the NNLS optimum is the unconstrained least-squares
// solution on some support set. Try them all and keep the best feasible one.
Eigen::VectorXd brute_force(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const auto n = A.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_res = b.norm();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    const Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
    if ((z.array() < 0).any()) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) x[cols[k]] = z[static_cast<Eigen::Index>(k)];
    const double res = (A * x - b).norm();
    if (res < best_res - 1e-14) {
      best_res = res;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("identity system") {
  const auto s = nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 2));
  CHECK(s.converged);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(2.0));
  CHECK(s.residual_norm == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.active_set.empty());
}

TEST_CASE("one block observed twice") {
  Eigen::MatrixXd A(2, 1);
  A << 1, 1;
  const auto s = nnls(A, Eigen::Vector2d(1, 3));
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.residual_norm == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("negative target is clamped") {
  const auto s = nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, -1));
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == 0.0);
  CHECK(s.active_set == std::vector<Eigen::Index>{1});
  CHECK(s.residual_norm == doctest::Approx(1.0));
}

TEST_CASE("lowest index enters first on ties") {
  InversionOptions opts;
  opts.max_iterations = 1;
  const auto s = nnls(Eigen::Matrix3d::Identity(), Eigen::Vector3d(2, 2, 2), opts);
  CHECK_FALSE(s.converged);
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.x[1] == 0.0);
  CHECK(s.x[2] == 0.0);
}

TEST_CASE("matches the exhaustive oracle on random problems") {
  std::mt19937 rng(1234);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 6, m = n + trial % 4;
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      b[i] = g(rng);
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) = g(rng);
    }
    const auto s = nnls(A, b);
    const auto oracle = brute_force(A, b);
    CHECK(s.converged);
    CHECK((s.x.array() >= 0).all());
    CHECK((A * s.x - b).norm() <= (A * oracle - b).norm() + 1e-10);
    CHECK((s.x - oracle).norm() <= 1e-8 * (1 + oracle.norm()));
    CHECK(verify_kkt(A, b, s.x, 1e-8).ok);
  }
}

TEST_CASE("residual history never increases") {
  std::mt19937 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd A(12, 8);
    Eigen::VectorXd b(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
      b[i] = g(rng);
      for (Eigen::Index j = 0; j < 8; ++j) A(i, j) = g(rng);
    }
    const auto s = nnls(A, b);
    for (std::size_t k = 1; k < s.residual_history.size(); ++k)
      CHECK(s.residual_history[k] <= s.residual_history[k - 1] + 1e-12);
  }
}

TEST_CASE("exact recovery of a non-negative source") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(10, 10) * 2.0;
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j) A(i, j) += 0.3 * u(rng);
  Eigen::VectorXd p(10);
  for (Eigen::Index i = 0; i < 10; ++i) p[i] = i % 3 == 0 ? 0.0 : 5 * u(rng);
  const auto s = nnls(A, A * p);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(std::abs(s.x[i] - p[i]) <= 1e-6 * std::max(1.0, p[i]));
}

TEST_CASE("tikhonov matches the scalar ridge oracle and shrinks") {
  InversionOptions opts;
  opts.tikhonov_lambda = 0.25;
  const auto s = nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(2, -1), opts);
  CHECK(s.x[0] == doctest::Approx(2.0 / 1.25));
  CHECK(s.x[1] == 0.0);
  CHECK(verify_kkt(Eigen::Matrix2d::Identity(), Eigen::Vector2d(2, -1), s.x, 1e-8, 0.25).ok);
  CHECK_FALSE(verify_kkt(Eigen::Matrix2d::Identity(), Eigen::Vector2d(2, -1), s.x, 1e-8, 0.0).ok);

  std::mt19937 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd A(9, 6);
  Eigen::VectorXd b(9);
  for (Eigen::Index i = 0; i < 9; ++i) {
    b[i] = g(rng) + 2;
    for (Eigen::Index j = 0; j < 6; ++j) A(i, j) = g(rng);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0}) {
    InversionOptions o;
    o.tikhonov_lambda = lambda;
    const double norm = nnls(A, b, o).x.norm();
    CHECK(norm <= prev + 1e-12);
    prev = norm;
  }
}

TEST_CASE("kkt verifier rejects wrong answers") {
  const Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  const Eigen::Vector2d b(1, -1);
  CHECK(verify_kkt(A, b, Eigen::Vector2d(1, 0), 1e-8).ok);
  CHECK_FALSE(verify_kkt(A, b, Eigen::Vector2d(0.5, 0), 1e-8).ok);
  CHECK_FALSE(verify_kkt(A, b, Eigen::Vector2d(1, -0.5), 1e-8).ok);
  CHECK_FALSE(verify_kkt(A, b, Eigen::Vector2d(1, 0.5), 1e-8).ok);
}

TEST_CASE("works with other scalars and expressions") {
  Eigen::MatrixXf A = Eigen::MatrixXf::Identity(4, 4) * 3.0f;
  const Eigen::VectorXf b = Eigen::VectorXf::LinSpaced(4, 1.0f, 4.0f);
  const auto s = nnls(A.topLeftCorner(3, 3), b.head(3));
  CHECK(s.x.size() == 3);
  CHECK(s.x[2] == doctest::Approx(1.0f));

  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 3);
  const auto t = nnls(2.0 * M, Eigen::VectorXd::Constant(3, 4.0));
  CHECK(t.x.isApprox(Eigen::VectorXd::Constant(3, 2.0)));
}

TEST_CASE("input errors") {
  CHECK_THROWS_AS(nnls(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Constant(3, 1.0)), Error);
  CHECK_THROWS_AS(nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, std::nan(""))), Error);
  InversionOptions bad;
  bad.kkt_tolerance = 0;
  CHECK_THROWS_AS(nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 2), bad), Error);
  bad = {};
  bad.tikhonov_lambda = -1;
  CHECK_THROWS_AS(nnls(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 2), bad), Error);
}

TEST_CASE("zero target gives zero") {
  const auto s = nnls(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  CHECK(s.x.isZero(0));
  CHECK(s.converged);
  CHECK(s.active_set.size() == 3);
}
