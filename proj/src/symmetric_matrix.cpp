#include "randumb/symmetric_matrix.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <string>

#include "randumb/errors.hpp"

namespace randumb {

SymmetricMatrix::SymmetricMatrix(std::size_t n)
    : n_(n),
      n1_(n / 2),
      lda_(n % 2 == 0 ? n + 1 : n),
      data_(storage_size(n), 0.0) {}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) {
    fail(ErrorKind::kShape, "symmetric matrix must be square");
  }
  const auto n = static_cast<std::size_t>(dense.rows());
  SymmetricMatrix out(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      out.at(i, j) = dense(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

SymmetricMatrix SymmetricMatrix::scaled_identity(std::size_t n, double value) {
  SymmetricMatrix out(n);
  out.add_to_diagonal(value);
  return out;
}

void SymmetricMatrix::rank1_update(double alpha, std::span<const double> u) {
  if (u.size() != n_) {
    fail(ErrorKind::kShape, "rank-1 update vector has length " +
                                std::to_string(u.size()) + ", expected " +
                                std::to_string(n_));
  }
  if (n_ == 0) return;
  const auto n1 = static_cast<blasint>(n1_);
  const auto n2 = static_cast<blasint>(n_ - n1_);
  const auto lda = static_cast<blasint>(lda_);
  double* base = data_.data();
  // Block layout: the n1 x n2 off-diagonal block at offset 0, the trailing
  // triangle (upper) at row n1, the leading triangle stored lower at row n1+1.
  cblas_dsyr(CblasColMajor, CblasUpper, n2, alpha, u.data() + n1_, 1,
             base + n1_, lda);
  if (n1 > 0) {
    cblas_dsyr(CblasColMajor, CblasLower, n1, alpha, u.data(), 1,
               base + n1_ + 1, lda);
    cblas_dger(CblasColMajor, n1, n2, alpha, u.data(), 1, u.data() + n1_, 1,
               base, lda);
  }
}

void SymmetricMatrix::rank_k_update(double alpha,
                                    const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (static_cast<std::size_t>(a.rows()) != n_) {
    fail(ErrorKind::kShape, "rank-k update block has " +
                                std::to_string(a.rows()) + " rows, expected " +
                                std::to_string(n_));
  }
  if (a.cols() == 0 || n_ == 0) return;
  const auto info = LAPACKE_dsfrk_work(
      LAPACK_COL_MAJOR, 'N', 'U', 'N', static_cast<lapack_int>(n_),
      static_cast<lapack_int>(a.cols()), alpha, a.data(),
      static_cast<lapack_int>(a.outerStride()), 1.0, data_.data());
  if (info != 0) {
    fail(ErrorKind::kNumerical, "dsfrk failed with info " + std::to_string(info));
  }
}

void SymmetricMatrix::scale(double factor) {
  for (double& v : data_) v *= factor;
}

void SymmetricMatrix::add_to_diagonal(double value) {
  for (std::size_t i = 0; i < n_; ++i) data_[index(i, i)] += value;
}

double SymmetricMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += data_[index(i, i)];
  return t;
}

double SymmetricMatrix::frobenius_squared() const {
  double all = 0.0;
  for (double v : data_) all += v * v;
  double diag = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double d = data_[index(i, i)];
    diag += d * d;
  }
  return 2.0 * all - diag;
}

double SymmetricMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Eigen::MatrixXd SymmetricMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd dense(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = data_[index(static_cast<std::size_t>(i),
                                   static_cast<std::size_t>(j))];
      dense(i, j) = v;
      dense(j, i) = v;
    }
  }
  return dense;
}

Eigen::VectorXd SymmetricMatrix::multiply(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != n_) {
    fail(ErrorKind::kShape, "multiply: vector length mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (std::size_t j = 0; j < n_; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double a = data_[index(i, j)];
      out[static_cast<Eigen::Index>(i)] += a * v[static_cast<Eigen::Index>(j)];
      out[static_cast<Eigen::Index>(j)] += a * v[static_cast<Eigen::Index>(i)];
    }
    out[static_cast<Eigen::Index>(j)] +=
        data_[index(j, j)] * v[static_cast<Eigen::Index>(j)];
  }
  return out;
}

CholeskyFactor CholeskyFactor::factorize(SymmetricMatrix a) {
  const auto n = static_cast<lapack_int>(a.size());
  if (n > 0) {
    const auto info =
        LAPACKE_dpftrf_work(LAPACK_COL_MAJOR, 'N', 'U', n, a.rfp().data());
    if (info > 0) {
      const auto pivot = static_cast<std::size_t>(info - 1);
      throw Error(ErrorKind::kNumerical,
                  "matrix is not positive definite: Cholesky pivot " +
                      std::to_string(pivot) + " is not positive",
                  pivot);
    }
    if (info < 0) {
      fail(ErrorKind::kNumerical, "dpftrf argument " + std::to_string(-info) +
                                      " invalid");
    }
  }
  return CholeskyFactor(std::move(a));
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = rhs;
  solve_in_place(x);
  return x;
}

void CholeskyFactor::solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const {
  if (static_cast<std::size_t>(rhs.rows()) != size()) {
    fail(ErrorKind::kShape, "solve: right-hand side has " +
                                std::to_string(rhs.rows()) + " rows, expected " +
                                std::to_string(size()));
  }
  if (rhs.cols() == 0 || size() == 0) return;
  const auto info = LAPACKE_dpftrs_work(
      LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(size()),
      static_cast<lapack_int>(rhs.cols()), factor_.rfp().data(), rhs.data(),
      static_cast<lapack_int>(rhs.outerStride()));
  if (info != 0) {
    fail(ErrorKind::kNumerical, "dpftrs failed with info " + std::to_string(info));
  }
}

double CholeskyFactor::log_det() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) sum += std::log(factor_(i, i));
  return 2.0 * sum;
}

}  // namespace randumb
