#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "randumb/feature_map.hpp"
#include "randumb/precision.hpp"
#include "randumb/streaming_estimator.hpp"

namespace randumb {

/// Decision rule plus embedding. The ablation rows map onto:
///   kRanDumb   random Fourier embedding + Mahalanobis NCM
///   kKernelNcm random Fourier embedding + inner-product NCM (no decorrelation)
///   kSlda      raw input + Mahalanobis NCM (no embedding)
///   kNcm       raw input + inner-product NCM
///   kRpRelu    max(0, W x) embedding + Mahalanobis NCM
enum class Variant : std::uint8_t {
  kRanDumb = 0,
  kKernelNcm = 1,
  kSlda = 2,
  kNcm = 3,
  kRpRelu = 4,
};

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);
/// True for the variants that rank classes by Mahalanobis distance.
bool uses_precision(Variant variant);

/// Random projection followed by ReLU; W has i.i.d. N(0, 1) entries.
struct RPSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;

  bool operator==(const RPSpec&) const = default;
};

using EmbeddingSpec = std::variant<std::monostate, FeatureMapSpec, RPSpec>;

struct ModelVariant {
  Variant variant = Variant::kRanDumb;
  /// Input dimension for the raw-input variants (slda / ncm).
  std::size_t input_dim = 0;
  EmbeddingSpec embedding;
  double lambda = 1e-6;
  EstimatorConfig estimator;

  /// Throws Error(kConfig) if the embedding kind does not fit the variant.
  void validate() const;
};

class RandomReluMap {
 public:
  static RandomReluMap sample(const RPSpec& spec);
  const RPSpec& spec() const noexcept { return spec_; }
  void apply(std::span<const float> x, std::span<float> out) const;
  std::size_t storage_bytes() const noexcept {
    return static_cast<std::size_t>(weights_.size()) * sizeof(float);
  }

 private:
  RandomReluMap(RPSpec spec, RowMatrixF weights)
      : spec_(spec), weights_(std::move(weights)) {}
  RPSpec spec_;
  RowMatrixF weights_;
};

/// Identity, random Fourier, or random ReLU map from raw input to the space
/// the statistics live in.
class Embedding {
 public:
  static Embedding from_spec(const EmbeddingSpec& spec, std::size_t input_dim);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  void apply(std::span<const float> x, std::span<float> out) const;
  std::size_t storage_bytes() const noexcept;
  const FeatureMap* feature_map() const noexcept {
    return std::get_if<FeatureMap>(&impl_);
  }

 private:
  struct Identity {};
  using Impl = std::variant<Identity, FeatureMap, RandomReluMap>;
  Embedding(Impl impl, std::size_t in, std::size_t out)
      : impl_(std::move(impl)), input_dim_(in), output_dim_(out) {}

  Impl impl_;
  std::size_t input_dim_;
  std::size_t output_dim_;
};

/// Streaming classifier: observe() one sample at a time, finalize() once to
/// build the precision model, then predict(). A finalized model is immutable
/// and predict()/scores() may run concurrently.
class Model {
 public:
  explicit Model(const ModelVariant& variant);
  /// Resumes from checkpointed statistics.
  Model(const ModelVariant& variant, StreamingEstimator estimator);

  const ModelVariant& variant() const noexcept { return variant_; }
  const Embedding& embedding() const noexcept { return embedding_; }
  const StreamingEstimator& estimator() const noexcept { return estimator_; }
  std::size_t input_dim() const noexcept { return embedding_.input_dim(); }
  std::size_t embed_dim() const noexcept { return embedding_.output_dim(); }

  void observe(std::span<const float> x_raw, std::int64_t label);
  void observe_embedded(std::span<const float> phi, std::int64_t label);

  /// Builds OAS shrinkage, ridge and the Cholesky factor for the
  /// Mahalanobis variants; no-op for inner-product variants.
  /// With release_scatter the scatter storage is handed to the factorization
  /// and the model can no longer observe; otherwise the covariance is copied
  /// and streaming may continue (later observe() calls invalidate it).
  void finalize(bool release_scatter = true);
  bool ready() const noexcept;

  /// Tracks (scatter + lambda I)^{-1} with one Sherman-Morrison update per
  /// scatter term, so predictions are available after every observe()
  /// without refactorization. OAS is not applied on this path. Must be
  /// enabled before the first observe(); requires lambda > 0.
  void enable_online_inverse();
  bool online_inverse_enabled() const noexcept { return online_inverse_.has_value(); }

  std::int64_t predict(std::span<const float> x_raw) const;
  std::int64_t predict_embedded(std::span<const float> phi) const;
  /// Per-class values ranked by predict(): squared Mahalanobis distances
  /// (lower is better) or inner products (higher is better).
  std::map<std::int64_t, double> scores(std::span<const float> x_raw) const;
  std::map<std::int64_t, double> scores_embedded(std::span<const float> phi) const;

  /// Shrinkage diagnostics from the last finalize().
  std::optional<double> shrinkage_rho() const noexcept { return rho_; }
  std::optional<double> shrinkage_mu() const noexcept { return mu_; }
  const std::optional<PrecisionModel>& precision() const noexcept { return precision_; }

  std::size_t state_bytes() const noexcept;

 private:
  void check_ready() const;
  std::int64_t argmin_mahalanobis(const Eigen::VectorXd& phi) const;

  ModelVariant variant_;
  Embedding embedding_;
  StreamingEstimator estimator_;
  std::vector<float> buffer_;

  std::optional<PrecisionModel> precision_;
  std::vector<std::int64_t> labels_;
  Eigen::MatrixXd means_;           // E x C
  Eigen::MatrixXd discriminants_;   // E x C, (S + lambda I)^{-1} mu_i
  Eigen::VectorXd offsets_;         // mu_i^T (S + lambda I)^{-1} mu_i
  std::optional<double> rho_;
  std::optional<double> mu_;
  std::optional<Eigen::MatrixXd> online_inverse_;
  bool stale_ = true;
  bool released_ = false;
};

}  // namespace randumb
