#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace randumb {

/// Dense symmetric matrix in LAPACK rectangular full packed (RFP) storage,
/// TRANSR='N', UPLO='U'. Holds n(n+1)/2 doubles, so the scatter matrix for
/// a 25000-dimensional embedding needs 2.5 GB rather than 5 GB, while rank-k
/// updates and Cholesky still run through level-3 BLAS.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n);

  /// Reads the upper triangle of `dense`.
  static SymmetricMatrix from_dense(const Eigen::MatrixXd& dense);
  static SymmetricMatrix scaled_identity(std::size_t n, double value);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[index(i, j)];
  }
  double& at(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

  /// this += alpha * u u^T
  void rank1_update(double alpha, std::span<const double> u);
  /// this += alpha * A A^T for an n x k column-major block.
  void rank_k_update(double alpha, const Eigen::Ref<const Eigen::MatrixXd>& a);

  void scale(double factor);
  void add_to_diagonal(double value);

  double trace() const;
  /// tr(A^2), i.e. the squared Frobenius norm.
  double frobenius_squared() const;
  double max_abs() const;

  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;

  std::span<const double> rfp() const noexcept { return data_; }
  std::span<double> rfp() noexcept { return data_; }
  std::size_t storage_bytes() const noexcept {
    return data_.size() * sizeof(double);
  }

  /// Position of the (i, j) entry in the RFP array.
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    if (i > j) std::swap(i, j);
    if (j >= n1_) return i + (j - n1_) * lda_;
    return (n1_ + 1 + j) + i * lda_;
  }

  static std::size_t storage_size(std::size_t n) { return n * (n + 1) / 2; }

 private:
  std::size_t n_ = 0;
  std::size_t n1_ = 0;
  std::size_t lda_ = 0;
  std::vector<double> data_;
};

/// Cholesky factor A = U^T U of an SPD matrix, kept in the same RFP array.
class CholeskyFactor {
 public:
  /// Factorizes in place. Throws Error(kNumerical) carrying the 0-based index
  /// of the first non-positive pivot when `a` is not positive definite.
  static CholeskyFactor factorize(SymmetricMatrix a);

  std::size_t size() const noexcept { return factor_.size(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Solves for every column of `rhs` in place.
  void solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const;

  double log_det() const;
  std::size_t storage_bytes() const noexcept { return factor_.storage_bytes(); }

 private:
  explicit CholeskyFactor(SymmetricMatrix factor) : factor_(std::move(factor)) {}
  SymmetricMatrix factor_;
};

}  // namespace randumb
