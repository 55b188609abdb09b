#pragma once

// Brute-force reference implementations for tests and `randumb verify`.
// Deliberately slow and literal: two-pass statistics and explicit dense
// inverses. Depends on Eigen only, never on the streaming library.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace randumb::oracle {

struct OracleReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

OracleReport make_report(std::string name, double max_error, double tolerance);

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// exp(-gamma ||x - y||^2).
double exact_rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double gamma);

enum class StatsMode { kPooled, kGlobal };

struct BatchStats {
  std::map<std::int64_t, Eigen::VectorXd> means;
  Eigen::VectorXd global_mean;
  Eigen::MatrixXd scatter;
  Eigen::MatrixXd covariance;
};

/// Rows of `samples` are observations. Covariance divides the scatter by
/// n - 1, or by n - C when `divide_by_n_minus_classes`.
BatchStats batch_stats(const Eigen::MatrixXd& samples, std::span<const std::int64_t> labels,
                       StatsMode mode, bool divide_by_n_minus_classes = false);

/// Throws SingularMatrixError when `a` is not invertible.
Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& a);

struct OasResult {
  double rho = 0.0;
  Eigen::MatrixXd shrunk;
};

/// Oracle Approximating Shrinkage of sample covariance `s` estimated from n
/// observations, transcribed from Chen, Wiesel, Eldar and Hero (2010).
OasResult textbook_oas(const Eigen::MatrixXd& s, double n);

/// argmax_i w_i^T x + b_i with w_i = (cov + lambda I)^{-1} mu_i and
/// b_i = -mu_i^T (cov + lambda I)^{-1} mu_i / 2. Ties go to the smaller label.
std::int64_t batch_lda_predict(const std::map<std::int64_t, Eigen::VectorXd>& means,
                               const Eigen::MatrixXd& covariance, double lambda,
                               const Eigen::VectorXd& x);

}  // namespace randumb::oracle
