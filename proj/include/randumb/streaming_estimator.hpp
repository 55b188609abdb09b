#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "randumb/symmetric_matrix.hpp"

namespace randumb {

/// Centering used for the scatter accumulator.
enum class EstimatorMode : std::uint8_t {
  kPooledWithinClass = 0,  // deviations from each sample's own class mean
  kGlobal = 1,             // deviations from the grand mean
};

/// Divisor applied to the scatter when forming the covariance.
enum class CovarianceNormalizer : std::uint8_t {
  kNMinusOne = 0,
  kNMinusClasses = 1,
};

std::string_view to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(std::string_view text);
std::string_view to_string(CovarianceNormalizer normalizer);
CovarianceNormalizer parse_normalizer(std::string_view text);

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::kPooledWithinClass;
  CovarianceNormalizer normalizer = CovarianceNormalizer::kNMinusOne;
  /// Off for classifiers that only need class means.
  bool track_scatter = true;
  /// Number of rank-1 scatter terms applied together as one rank-k update.
  /// 1 applies every term inside observe(); larger values hold at most
  /// update_block - 1 pending terms in a fixed-size buffer, flushed before
  /// any read of the scatter.
  std::size_t update_block = 1;
};

struct ClassStats {
  std::int64_t class_id = 0;
  std::uint64_t count = 0;
  Eigen::VectorXd mean;
};

/// One-sample-at-a-time estimator of class means and a single shared
/// scatter matrix. No sample is retained: memory is O(E^2 + C E).
///
/// Single writer. Read accessors flush pending rank-1 terms and therefore
/// must not run concurrently with observe().
class StreamingEstimator {
 public:
  explicit StreamingEstimator(std::size_t dim, EstimatorConfig config = {});

  /// Throws Error(kShape) on a length mismatch and Error(kData) on
  /// non-finite entries; the estimator is unchanged in both cases.
  void observe(std::span<const float> phi, std::int64_t label);
  void observe(std::span<const double> phi, std::int64_t label);

  std::size_t dim() const noexcept { return dim_; }
  const EstimatorConfig& config() const noexcept { return config_; }
  std::uint64_t total_count() const noexcept { return total_count_; }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  const std::map<std::int64_t, ClassStats>& classes() const noexcept {
    return classes_;
  }
  const Eigen::VectorXd& global_mean() const noexcept { return global_mean_; }

  /// Snapshot of the running class means keyed by label.
  std::map<std::int64_t, Eigen::VectorXd> class_means() const;

  /// Accumulated scatter (sum of centered outer products).
  const SymmetricMatrix& scatter() const;

  /// scatter / (n - 1), or / (n - C) with kNMinusClasses.
  /// Throws Error(kInsufficientData) when fewer than two samples were seen.
  SymmetricMatrix covariance() const;

  /// Like covariance() but moves the scatter storage out instead of copying;
  /// afterwards the estimator no longer tracks scatter. Used when the
  /// E x E matrix is too large to duplicate.
  SymmetricMatrix take_covariance();

  /// Bytes held by the estimator state (scatter, pending block, means).
  std::size_t state_bytes() const noexcept;
  std::size_t pending_updates() const noexcept { return pending_count_; }

  void flush() const;

  /// Reassembles an estimator from checkpointed state.
  static StreamingEstimator restore(std::size_t dim, EstimatorConfig config,
                                    std::uint64_t total_count,
                                    Eigen::VectorXd global_mean,
                                    std::map<std::int64_t, ClassStats> classes,
                                    SymmetricMatrix scatter);

 private:
  template <typename T>
  void observe_impl(std::span<const T> phi, std::int64_t label);
  void push_scatter_term(double weight);
  double normalizer_divisor() const;

  std::size_t dim_;
  EstimatorConfig config_;
  std::uint64_t total_count_ = 0;
  Eigen::VectorXd global_mean_;
  std::map<std::int64_t, ClassStats> classes_;
  Eigen::VectorXd work_;

  mutable SymmetricMatrix scatter_;
  mutable Eigen::MatrixXd pending_;
  mutable std::size_t pending_count_ = 0;
};

}  // namespace randumb
