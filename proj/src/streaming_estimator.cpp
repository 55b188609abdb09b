#include "randumb/streaming_estimator.hpp"

#include <cmath>
#include <string>

#include "randumb/errors.hpp"

namespace randumb {

std::string_view to_string(EstimatorMode mode) {
  return mode == EstimatorMode::kGlobal ? "global" : "pooled_within_class";
}

EstimatorMode parse_estimator_mode(std::string_view text) {
  if (text == "pooled_within_class" || text == "pooled") {
    return EstimatorMode::kPooledWithinClass;
  }
  if (text == "global") return EstimatorMode::kGlobal;
  fail(ErrorKind::kConfig, "unknown estimator mode '" + std::string(text) + "'");
}

std::string_view to_string(CovarianceNormalizer normalizer) {
  return normalizer == CovarianceNormalizer::kNMinusClasses ? "n_minus_classes"
                                                            : "n_minus_one";
}

CovarianceNormalizer parse_normalizer(std::string_view text) {
  if (text == "n_minus_one") return CovarianceNormalizer::kNMinusOne;
  if (text == "n_minus_classes") return CovarianceNormalizer::kNMinusClasses;
  fail(ErrorKind::kConfig, "unknown covariance normalizer '" + std::string(text) + "'");
}

StreamingEstimator::StreamingEstimator(std::size_t dim, EstimatorConfig config)
    : dim_(dim),
      config_(config),
      global_mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      work_(static_cast<Eigen::Index>(dim)) {
  if (dim == 0) fail(ErrorKind::kConfig, "estimator dimension must be >= 1");
  if (config_.update_block == 0) {
    fail(ErrorKind::kConfig, "update_block must be >= 1");
  }
  if (config_.track_scatter) {
    scatter_ = SymmetricMatrix(dim);
    if (config_.update_block > 1) {
      pending_.resize(static_cast<Eigen::Index>(dim),
                      static_cast<Eigen::Index>(config_.update_block));
    }
  }
}

void StreamingEstimator::observe(std::span<const float> phi, std::int64_t label) {
  observe_impl(phi, label);
}

void StreamingEstimator::observe(std::span<const double> phi, std::int64_t label) {
  observe_impl(phi, label);
}

template <typename T>
void StreamingEstimator::observe_impl(std::span<const T> phi, std::int64_t label) {
  if (phi.size() != dim_) {
    fail(ErrorKind::kShape, "observe: embedding has dimension " +
                                std::to_string(phi.size()) + ", expected " +
                                std::to_string(dim_));
  }
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!std::isfinite(static_cast<double>(phi[i]))) {
      fail(ErrorKind::kData, "observe: non-finite value at index " +
                                 std::to_string(i) + " (label " +
                                 std::to_string(label) + ")");
    }
  }
  const auto x = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(
                     phi.data(), static_cast<Eigen::Index>(phi.size()))
                     .template cast<double>();

  auto it = classes_.find(label);
  if (it == classes_.end()) {
    ClassStats fresh;
    fresh.class_id = label;
    fresh.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    it = classes_.emplace(label, std::move(fresh)).first;
  }
  ClassStats& cls = it->second;

  const bool pooled = config_.mode == EstimatorMode::kPooledWithinClass;
  const double n_prior = static_cast<double>(pooled ? cls.count : total_count_);
  Eigen::VectorXd& center = pooled ? cls.mean : global_mean_;

  // work = phi - pre-update center; the rank-1 term uses n/(n+1) of it.
  work_ = x - center;
  if (config_.track_scatter && n_prior > 0.0) {
    push_scatter_term(n_prior / (n_prior + 1.0));
  }
  center += work_ / (n_prior + 1.0);

  if (!pooled) {
    work_ = x - cls.mean;
    cls.mean += work_ / static_cast<double>(cls.count + 1);
  } else {
    work_ = x - global_mean_;
    global_mean_ += work_ / static_cast<double>(total_count_ + 1);
  }
  ++cls.count;
  ++total_count_;
}

void StreamingEstimator::push_scatter_term(double weight) {
  if (config_.update_block == 1) {
    scatter_.rank1_update(weight, std::span<const double>(
                                      work_.data(), static_cast<std::size_t>(work_.size())));
    return;
  }
  pending_.col(static_cast<Eigen::Index>(pending_count_)) = std::sqrt(weight) * work_;
  if (++pending_count_ == config_.update_block) flush();
}

void StreamingEstimator::flush() const {
  if (pending_count_ == 0) return;
  scatter_.rank_k_update(1.0, pending_.leftCols(static_cast<Eigen::Index>(pending_count_)));
  pending_count_ = 0;
}

std::map<std::int64_t, Eigen::VectorXd> StreamingEstimator::class_means() const {
  std::map<std::int64_t, Eigen::VectorXd> out;
  for (const auto& [label, stats] : classes_) out.emplace(label, stats.mean);
  return out;
}

const SymmetricMatrix& StreamingEstimator::scatter() const {
  if (!config_.track_scatter) {
    fail(ErrorKind::kUnsupported, "estimator does not track scatter");
  }
  flush();
  return scatter_;
}

double StreamingEstimator::normalizer_divisor() const {
  if (total_count_ < 2) {
    fail(ErrorKind::kInsufficientData,
         "covariance needs at least 2 samples, have " + std::to_string(total_count_));
  }
  if (config_.normalizer == CovarianceNormalizer::kNMinusClasses) {
    if (total_count_ <= classes_.size()) {
      fail(ErrorKind::kInsufficientData,
           "n - C normalizer needs more samples than classes");
    }
    return static_cast<double>(total_count_ - classes_.size());
  }
  return static_cast<double>(total_count_ - 1);
}

SymmetricMatrix StreamingEstimator::covariance() const {
  const double divisor = normalizer_divisor();
  SymmetricMatrix cov = scatter();
  cov.scale(1.0 / divisor);
  return cov;
}

SymmetricMatrix StreamingEstimator::take_covariance() {
  const double divisor = normalizer_divisor();
  flush();
  if (!config_.track_scatter) {
    fail(ErrorKind::kUnsupported, "estimator does not track scatter");
  }
  SymmetricMatrix cov = std::move(scatter_);
  cov.scale(1.0 / divisor);
  scatter_ = SymmetricMatrix();
  pending_.resize(0, 0);
  config_.track_scatter = false;
  return cov;
}

std::size_t StreamingEstimator::state_bytes() const noexcept {
  const std::size_t vec = dim_ * sizeof(double);
  return scatter_.storage_bytes() +
         static_cast<std::size_t>(pending_.size()) * sizeof(double) +
         2 * vec +  // global mean + work buffer
         classes_.size() * (vec + sizeof(ClassStats));
}

StreamingEstimator StreamingEstimator::restore(
    std::size_t dim, EstimatorConfig config, std::uint64_t total_count,
    Eigen::VectorXd global_mean, std::map<std::int64_t, ClassStats> classes,
    SymmetricMatrix scatter) {
  StreamingEstimator est(dim, config);
  if (static_cast<std::size_t>(global_mean.size()) != dim) {
    fail(ErrorKind::kFormat, "checkpoint global mean has wrong dimension");
  }
  std::uint64_t sum = 0;
  for (const auto& [label, stats] : classes) {
    if (static_cast<std::size_t>(stats.mean.size()) != dim || stats.class_id != label) {
      fail(ErrorKind::kFormat, "checkpoint class record inconsistent");
    }
    sum += stats.count;
  }
  if (sum != total_count) {
    fail(ErrorKind::kFormat, "checkpoint class counts do not sum to total count");
  }
  if (config.track_scatter && scatter.size() != dim) {
    fail(ErrorKind::kFormat, "checkpoint scatter has wrong dimension");
  }
  est.total_count_ = total_count;
  est.global_mean_ = std::move(global_mean);
  est.classes_ = std::move(classes);
  if (config.track_scatter) est.scatter_ = std::move(scatter);
  return est;
}

}  // namespace randumb
