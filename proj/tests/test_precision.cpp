#include <cmath>

#include "randumb/oracle.hpp"
#include "randumb/precision.hpp"
#include "test_util.hpp"

using randumb::ErrorKind;
using randumb::PrecisionModel;
using randumb::SymmetricMatrix;

TEST_SUITE("precision") {

TEST_CASE("OAS keeps a scaled identity and maps zero to zero") {
  for (double sigma2 : {1e-6, 0.3, 4.0, 1e4}) {
    const Eigen::MatrixXd s = sigma2 * Eigen::MatrixXd::Identity(7, 7);
    const auto r = randumb::oas_shrink(s, 30);
    CHECK(r.rho == 1.0);
    CHECK(testutil::max_abs_diff(r.shrunk.to_dense(), s) <= 1e-12 * sigma2);
  }
  const auto zero = randumb::oas_shrink(Eigen::MatrixXd::Zero(5, 5), 10);
  CHECK(zero.shrunk.max_abs() == 0.0);
  CHECK(zero.mu == 0.0);
}

TEST_CASE("OAS matches the textbook oracle on random SPD input") {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd s = testutil::random_spd(gen, 20);
  const auto got = randumb::oas_shrink(s, 50);
  const auto want = randumb::oracle::textbook_oas(s, 50.0);
  CHECK(std::abs(got.rho - want.rho) < 1e-10);
  CHECK(testutil::max_abs_diff(got.shrunk.to_dense(), want.shrunk) < 1e-10);
  CHECK(got.mu == doctest::Approx(s.trace() / 20.0));

  // Eigenvalues of the result lie between those of S and mu.
  const Eigen::VectorXd es = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
  const Eigen::VectorXd eo =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(got.shrunk.to_dense()).eigenvalues();
  CHECK(eo.minCoeff() >= std::min(es.minCoeff(), got.mu) - 1e-12);
  CHECK(eo.maxCoeff() <= std::max(es.maxCoeff(), got.mu) + 1e-12);
}

TEST_CASE("OAS intensity stays in [0, 1] for degenerate input") {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 100; ++t) {
    const auto dim = static_cast<Eigen::Index>(2 + gen() % 30);
    const Eigen::MatrixXd a = testutil::random_matrix(gen, dim, 1 + static_cast<Eigen::Index>(gen() % 3));
    const auto r = randumb::oas_shrink(Eigen::MatrixXd(a * a.transpose()), 2 + gen() % 5);
    CHECK(r.rho >= 0.0);
    CHECK(r.rho <= 1.0);
  }
}

TEST_CASE("OAS rejects asymmetric input and n < 2") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(0, 2) = 0.5;
  CHECK_ERROR_KIND(randumb::oas_shrink(s, 10), ErrorKind::kData);
  CHECK_ERROR_KIND(randumb::oas_shrink(Eigen::MatrixXd::Identity(3, 3), 1),
                   ErrorKind::kInsufficientData);
}

TEST_CASE("precision solves in closed-form cases") {
  const auto eye = PrecisionModel::build(SymmetricMatrix::scaled_identity(4, 1.0), 0.0);
  const Eigen::Vector4d v(1, -2, 3, 0.5);
  CHECK(testutil::max_abs_diff(eye.solve(v), v) < 1e-15);

  const Eigen::Vector4d d(1.0, 2.0, 4.0, 8.0);
  const double lambda = 0.5;
  const auto diag = PrecisionModel::build(SymmetricMatrix::from_dense(d.asDiagonal()), lambda);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd x = diag.solve(Eigen::Vector4d::Unit(i));
    CHECK(x[i] == doctest::Approx(1.0 / (d[i] + lambda)));
  }

  const auto two = PrecisionModel::build(SymmetricMatrix::scaled_identity(2, 1.0), 0.0);
  CHECK(two.mahalanobis_sq(Eigen::Vector2d(3, 4)) == doctest::Approx(25.0));
  CHECK(two.mahalanobis_sq(Eigen::Vector2d::Zero()) == 0.0);
}

TEST_CASE("solve and quadratic form agree with a dense inverse") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd s = testutil::random_spd(gen, 50);
  const auto pm = PrecisionModel::build(SymmetricMatrix::from_dense(s), 1e-3);
  const Eigen::MatrixXd inv =
      randumb::oracle::dense_inverse(s + 1e-3 * Eigen::MatrixXd::Identity(50, 50));
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd b = testutil::random_matrix(gen, 50, 1);
    const Eigen::VectorXd x = pm.solve(b);
    CHECK(testutil::max_abs_diff(x, inv * b) < 1e-8);
    const Eigen::MatrixXd regular = s + 1e-3 * Eigen::MatrixXd::Identity(50, 50);
    CHECK((regular * x - b).norm() / b.norm() < 1e-6);
    CHECK(std::abs(pm.mahalanobis_sq(b) - b.dot(inv * b)) < 1e-8);
  }
}

TEST_CASE("larger ridge never increases the Mahalanobis distance") {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd s = testutil::random_spd(gen, 12);
  const Eigen::VectorXd delta = testutil::random_matrix(gen, 12, 1);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 1e-6, 1e-3, 0.1, 1.0, 10.0}) {
    const double d = PrecisionModel::build(SymmetricMatrix::from_dense(s), lambda).mahalanobis_sq(delta);
    CHECK(d <= previous);
    previous = d;
  }
}

TEST_CASE("non-positive-definite input reports the pivot") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(5, 5);
  s(3, 3) = -2.0;
  try {
    PrecisionModel::build(SymmetricMatrix::from_dense(s), 1.0);
    FAIL("expected a numerical error");
  } catch (const randumb::Error& e) {
    CHECK(e.kind() == ErrorKind::kNumerical);
    CHECK(e.pivot() == std::optional<std::size_t>(3));
  }
  CHECK_ERROR_KIND(PrecisionModel::build(SymmetricMatrix::scaled_identity(2, 1.0), -1.0),
                   ErrorKind::kConfig);
  const auto pm = PrecisionModel::build(SymmetricMatrix::scaled_identity(3, 1.0), 0.0);
  CHECK_ERROR_KIND(pm.mahalanobis_sq(Eigen::Vector2d(1, 1)), ErrorKind::kShape);
}

TEST_CASE("Sherman-Morrison closed forms and direct-inverse agreement") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(randumb::sherman_morrison_update(eye, Eigen::Vector3d::Zero(), 1.0) == eye);
  const Eigen::MatrixXd half = randumb::sherman_morrison_update(eye, Eigen::Vector3d::Unit(0), 1.0);
  Eigen::MatrixXd want = eye;
  want(0, 0) = 0.5;
  CHECK(testutil::max_abs_diff(half, want) < 1e-15);

  std::mt19937_64 gen(5);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(30, 30);
  Eigen::MatrixXd inv = a;
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd u = testutil::random_matrix(gen, 30, 1);
    randumb::sherman_morrison_update_in_place(inv, u, 0.5);
    a += 0.5 * u * u.transpose();
  }
  CHECK(testutil::max_abs_diff(inv, randumb::oracle::dense_inverse(a)) < 1e-6);

  CHECK_ERROR_KIND(randumb::sherman_morrison_update(eye, Eigen::Vector3d::Unit(1), -1.0),
                   ErrorKind::kSingularUpdate);
}

}
