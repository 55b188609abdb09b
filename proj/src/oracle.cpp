#include "randumb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace randumb::oracle {

OracleReport make_report(std::string name, double max_error, double tolerance) {
  return {std::move(name), max_error, tolerance, max_error <= tolerance};
}

double exact_rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double gamma) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sq += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-gamma * sq);
}

BatchStats batch_stats(const Eigen::MatrixXd& samples, std::span<const std::int64_t> labels,
                       StatsMode mode, bool divide_by_n_minus_classes) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  BatchStats out;

  // Pass 1: means.
  std::map<std::int64_t, Eigen::Index> counts;
  out.global_mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, fresh] = out.means.try_emplace(labels[i], Eigen::VectorXd::Zero(d));
    it->second += samples.row(i).transpose();
    ++counts[labels[i]];
    out.global_mean += samples.row(i).transpose();
  }
  for (auto& [label, mean] : out.means) mean /= static_cast<double>(counts[label]);
  out.global_mean /= static_cast<double>(n);

  // Pass 2: centered outer products.
  out.scatter = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& center =
        mode == StatsMode::kPooled ? out.means.at(labels[i]) : out.global_mean;
    const Eigen::VectorXd delta = samples.row(i).transpose() - center;
    out.scatter += delta * delta.transpose();
  }
  const double divisor = divide_by_n_minus_classes
                             ? static_cast<double>(n) - static_cast<double>(out.means.size())
                             : static_cast<double>(n - 1);
  out.covariance = out.scatter / divisor;
  return out;
}

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& a) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularMatrixError("matrix is singular");
  return lu.inverse();
}

OasResult textbook_oas(const Eigen::MatrixXd& s, double n) {
  const double p = static_cast<double>(s.rows());
  const Eigen::MatrixXd s2 = s * s;
  const double tr_s = s.trace();
  const double tr_s2 = s2.trace();
  const double num = (1.0 - 2.0 / p) * tr_s2 + tr_s * tr_s;
  const double den = (n + 1.0 - 2.0 / p) * (tr_s2 - tr_s * tr_s / p);
  OasResult out;
  out.rho = den <= 0.0 ? 1.0 : std::min(1.0, num / den);
  const Eigen::MatrixXd target =
      (tr_s / p) * Eigen::MatrixXd::Identity(s.rows(), s.cols());
  out.shrunk = (1.0 - out.rho) * s + out.rho * target;
  return out;
}

std::int64_t batch_lda_predict(const std::map<std::int64_t, Eigen::VectorXd>& means,
                               const Eigen::MatrixXd& covariance, double lambda,
                               const Eigen::VectorXd& x) {
  const Eigen::MatrixXd regularized =
      covariance + lambda * Eigen::MatrixXd::Identity(covariance.rows(), covariance.cols());
  const Eigen::MatrixXd inv = dense_inverse(regularized);
  std::int64_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [label, mu] : means) {  // ascending labels
    const Eigen::VectorXd w = inv * mu;
    const double score = w.dot(x) - 0.5 * mu.dot(w);
    if (score > best_score) {
      best_score = score;
      best = label;
    }
  }
  return best;
}

}  // namespace randumb::oracle
