#include "randumb/precision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "randumb/errors.hpp"

namespace randumb {

double oas_intensity(double trace, double trace_sq, std::size_t dim,
                     std::uint64_t num_samples) {
  const double e = static_cast<double>(dim);
  const double n = static_cast<double>(num_samples);
  const double numerator = (1.0 - 2.0 / e) * trace_sq + trace * trace;
  const double denominator = (n + 1.0 - 2.0 / e) * (trace_sq - trace * trace / e);
  if (!(denominator > 0.0)) return 1.0;
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

ShrinkageResult oas_shrink(SymmetricMatrix s, std::uint64_t num_samples) {
  if (num_samples < 2) {
    fail(ErrorKind::kInsufficientData, "OAS needs at least 2 samples");
  }
  if (s.size() == 0) fail(ErrorKind::kShape, "OAS on an empty matrix");
  const double trace = s.trace();
  const double trace_sq = s.frobenius_squared();
  ShrinkageResult result;
  result.mu = trace / static_cast<double>(s.size());
  result.rho = oas_intensity(trace, trace_sq, s.size(), num_samples);
  s.scale(1.0 - result.rho);
  s.add_to_diagonal(result.rho * result.mu);
  result.shrunk = std::move(s);
  return result;
}

ShrinkageResult oas_shrink(const Eigen::MatrixXd& s, std::uint64_t num_samples) {
  if (s.rows() != s.cols()) fail(ErrorKind::kShape, "OAS input must be square");
  const double scale = s.cwiseAbs().maxCoeff();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-6 * scale) {
    fail(ErrorKind::kData, "OAS input is not symmetric (max asymmetry " +
                               std::to_string(asym) + ")");
  }
  return oas_shrink(SymmetricMatrix::from_dense(s), num_samples);
}

PrecisionModel PrecisionModel::build(SymmetricMatrix shrunk, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::kConfig, "ridge lambda must be finite and >= 0");
  }
  shrunk.add_to_diagonal(lambda);
  return PrecisionModel(lambda, CholeskyFactor::factorize(std::move(shrunk)));
}

double PrecisionModel::mahalanobis_sq(const Eigen::VectorXd& delta) const {
  if (static_cast<std::size_t>(delta.size()) != dim()) {
    fail(ErrorKind::kShape, "mahalanobis_sq: delta has dimension " +
                                std::to_string(delta.size()) + ", expected " +
                                std::to_string(dim()));
  }
  const double q = delta.dot(factor_.solve(delta));
  if (q >= 0.0) return q;
  if (q >= -1e-9) return 0.0;
  fail(ErrorKind::kNumerical, "negative quadratic form " + std::to_string(q));
}

void sherman_morrison_update_in_place(Eigen::MatrixXd& inv,
                                      const Eigen::VectorXd& u, double c) {
  if (inv.rows() != inv.cols() || inv.rows() != u.size()) {
    fail(ErrorKind::kShape, "Sherman-Morrison: dimension mismatch");
  }
  const Eigen::VectorXd left = inv * u;
  const Eigen::RowVectorXd right = u.transpose() * inv;
  const double denominator = 1.0 + c * u.dot(left);
  if (std::abs(denominator) < 1e-12) {
    fail(ErrorKind::kSingularUpdate,
         "Sherman-Morrison denominator " + std::to_string(denominator));
  }
  inv.noalias() -= (c / denominator) * left * right;
}

Eigen::MatrixXd sherman_morrison_update(Eigen::MatrixXd inv,
                                        const Eigen::VectorXd& u, double c) {
  sherman_morrison_update_in_place(inv, u, c);
  return inv;
}

}  // namespace randumb
