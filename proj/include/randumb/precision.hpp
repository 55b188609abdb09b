#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "randumb/symmetric_matrix.hpp"

namespace randumb {

/// OAS-shrunk covariance: shrunk = (1 - rho) S + rho mu I with mu = tr(S)/E.
struct ShrinkageResult {
  double rho = 0.0;
  double mu = 0.0;
  SymmetricMatrix shrunk;
};

/// Oracle Approximating Shrinkage intensity from the traces of S and S^2:
///
///   rho = min(1, ((1 - 2/E) tr(S^2) + tr(S)^2)
///                / ((n + 1 - 2/E) (tr(S^2) - tr(S)^2 / E)))
///
/// with rho = 1 when the denominator is not positive (S proportional to I).
double oas_intensity(double trace, double trace_sq, std::size_t dim,
                     std::uint64_t num_samples);

/// Shrinks `s` in place (pass by value; move large matrices in).
/// `num_samples` is the number of observations behind S and must be >= 2.
ShrinkageResult oas_shrink(SymmetricMatrix s, std::uint64_t num_samples);

/// Dense entry point. Throws Error(kData) if `s` is not symmetric to within
/// 1e-6 * max|S|.
ShrinkageResult oas_shrink(const Eigen::MatrixXd& s, std::uint64_t num_samples);

/// Factorized (shrunk + lambda I), used through solves only.
class PrecisionModel {
 public:
  /// Throws Error(kConfig) for negative lambda and Error(kNumerical) with the
  /// failing pivot if the ridge-regularized matrix is not positive definite.
  static PrecisionModel build(SymmetricMatrix shrunk, double lambda);

  double lambda() const noexcept { return lambda_; }
  double log_det() const noexcept { return log_det_; }
  std::size_t dim() const noexcept { return factor_.size(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return factor_.solve(v); }
  void solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const {
    factor_.solve_in_place(rhs);
  }

  /// delta^T (shrunk + lambda I)^{-1} delta, clamped at 0 for tiny negative
  /// round-off.
  double mahalanobis_sq(const Eigen::VectorXd& delta) const;

  std::size_t storage_bytes() const noexcept { return factor_.storage_bytes(); }

 private:
  PrecisionModel(double lambda, CholeskyFactor factor)
      : lambda_(lambda), factor_(std::move(factor)), log_det_(factor_.log_det()) {}

  double lambda_;
  CholeskyFactor factor_;
  double log_det_;
};

inline PrecisionModel build_precision(SymmetricMatrix shrunk, double lambda) {
  return PrecisionModel::build(std::move(shrunk), lambda);
}

inline double mahalanobis_sq(const PrecisionModel& pm, const Eigen::VectorXd& delta) {
  return pm.mahalanobis_sq(delta);
}

/// Given inv = A^{-1}, returns (A + c u u^T)^{-1}. Throws
/// Error(kSingularUpdate) when |1 + c u^T inv u| < 1e-12.
Eigen::MatrixXd sherman_morrison_update(Eigen::MatrixXd inv,
                                        const Eigen::VectorXd& u, double c);
void sherman_morrison_update_in_place(Eigen::MatrixXd& inv,
                                      const Eigen::VectorXd& u, double c);

}  // namespace randumb
