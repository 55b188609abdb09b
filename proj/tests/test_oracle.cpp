#include <cmath>

#include "randumb/oracle.hpp"
#include "test_util.hpp"

namespace oracle = randumb::oracle;

TEST_SUITE("oracle") {

TEST_CASE("RBF kernel closed forms") {
  const Eigen::Vector3d x(1, 2, 3);
  CHECK(oracle::exact_rbf_kernel(x, x, 1.0) == 1.0);
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, std::sqrt(std::log(2.0)));
  CHECK(oracle::exact_rbf_kernel(a, b, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("two-point batch covariance") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 3, 3, -1;
  const std::vector<std::int64_t> y{0, 0};
  const auto s = oracle::batch_stats(x, y, oracle::StatsMode::kPooled);
  const Eigen::Vector2d d(-2, 4);
  CHECK(testutil::max_abs_diff(s.covariance, 0.5 * d * d.transpose()) < 1e-15);
  CHECK(s.means.at(0) == Eigen::Vector2d(2, 1));
}

TEST_CASE("LDA oracle picks the class whose mean is the input") {
  std::map<std::int64_t, Eigen::VectorXd> means{{0, Eigen::Vector2d(0, 0)}, {1, Eigen::Vector2d(2, 1)}};
  const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  CHECK(oracle::batch_lda_predict(means, eye, 0.0, Eigen::Vector2d(2, 1)) == 1);
  CHECK(oracle::batch_lda_predict(means, eye, 0.0, Eigen::Vector2d(0, 0)) == 0);
  means[2] = Eigen::Vector2d(0, 0);
  CHECK(oracle::batch_lda_predict(means, eye, 0.0, Eigen::Vector2d(0, 0)) == 0);
  CHECK_THROWS_AS(oracle::batch_lda_predict(means, Eigen::Matrix2d::Zero(), 0.0, Eigen::Vector2d(0, 0)),
                  oracle::SingularMatrixError);
}

TEST_CASE("reports pass exactly when the error is within tolerance") {
  CHECK(oracle::make_report("a", 1e-9, 1e-8).pass);
  CHECK(oracle::make_report("b", 1e-8, 1e-8).pass);
  CHECK_FALSE(oracle::make_report("c", 2e-8, 1e-8).pass);
}

}
