#include "randumb/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "randumb/errors.hpp"
#include "randumb/rng.hpp"

namespace randumb {

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kRanDumb: return "randumb";
    case Variant::kKernelNcm: return "kernel_ncm";
    case Variant::kSlda: return "slda";
    case Variant::kNcm: return "ncm";
    case Variant::kRpRelu: return "rp_relu";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::kRanDumb, Variant::kKernelNcm, Variant::kSlda,
                    Variant::kNcm, Variant::kRpRelu}) {
    if (to_string(v) == text) return v;
  }
  fail(ErrorKind::kConfig, "unknown variant '" + std::string(text) + "'");
}

bool uses_precision(Variant variant) {
  return variant == Variant::kRanDumb || variant == Variant::kSlda ||
         variant == Variant::kRpRelu;
}

void ModelVariant::validate() const {
  const bool has_rff = std::holds_alternative<FeatureMapSpec>(embedding);
  const bool has_rp = std::holds_alternative<RPSpec>(embedding);
  switch (variant) {
    case Variant::kRanDumb:
    case Variant::kKernelNcm:
      if (!has_rff) {
        fail(ErrorKind::kConfig, std::string(to_string(variant)) +
                                     " requires a random Fourier embedding spec");
      }
      std::get<FeatureMapSpec>(embedding).validate();
      break;
    case Variant::kRpRelu:
      if (!has_rp) fail(ErrorKind::kConfig, "rp_relu requires an RP embedding spec");
      if (std::get<RPSpec>(embedding).input_dim == 0 ||
          std::get<RPSpec>(embedding).output_dim == 0) {
        fail(ErrorKind::kConfig, "RP dimensions must be >= 1");
      }
      break;
    case Variant::kSlda:
    case Variant::kNcm:
      if (has_rff || has_rp) {
        fail(ErrorKind::kConfig, std::string(to_string(variant)) +
                                     " works on raw inputs and takes no embedding");
      }
      if (input_dim == 0) fail(ErrorKind::kConfig, "input_dim must be >= 1");
      break;
  }
  if (uses_precision(variant) && (!(lambda >= 0.0) || !std::isfinite(lambda))) {
    fail(ErrorKind::kConfig, "lambda must be finite and >= 0");
  }
}

RandomReluMap RandomReluMap::sample(const RPSpec& spec) {
  RowMatrixF weights(static_cast<Eigen::Index>(spec.output_dim),
                     static_cast<Eigen::Index>(spec.input_dim));
  GaussianRng rng(spec.seed);
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
      weights(r, c) = static_cast<float>(rng.normal());
    }
  }
  return RandomReluMap(spec, std::move(weights));
}

void RandomReluMap::apply(std::span<const float> x, std::span<float> out) const {
  if (x.size() != spec_.input_dim || out.size() != spec_.output_dim) {
    fail(ErrorKind::kShape, "rp_relu: dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXf> xv(x.data(),
                                             static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = std::max(0.0f, weights_.row(r).dot(xv));
  }
}

Embedding Embedding::from_spec(const EmbeddingSpec& spec, std::size_t input_dim) {
  if (const auto* rff = std::get_if<FeatureMapSpec>(&spec)) {
    return Embedding(FeatureMap::sample(*rff), rff->input_dim, rff->output_dim());
  }
  if (const auto* rp = std::get_if<RPSpec>(&spec)) {
    return Embedding(RandomReluMap::sample(*rp), rp->input_dim, rp->output_dim);
  }
  return Embedding(Identity{}, input_dim, input_dim);
}

void Embedding::apply(std::span<const float> x, std::span<float> out) const {
  if (x.size() != input_dim_) {
    fail(ErrorKind::kShape, "input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim_));
  }
  std::visit(
      [&](const auto& impl) {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, Identity>) {
          std::copy(x.begin(), x.end(), out.begin());
        } else if constexpr (std::is_same_v<T, FeatureMap>) {
          impl.embed(x, out);
        } else {
          impl.apply(x, out);
        }
      },
      impl_);
}

std::size_t Embedding::storage_bytes() const noexcept {
  if (const auto* fm = std::get_if<FeatureMap>(&impl_)) return fm->storage_bytes();
  if (const auto* rp = std::get_if<RandomReluMap>(&impl_)) return rp->storage_bytes();
  return 0;
}

namespace {

EstimatorConfig estimator_config_for(const ModelVariant& v) {
  EstimatorConfig cfg = v.estimator;
  cfg.track_scatter = uses_precision(v.variant);
  return cfg;
}

Embedding checked_embedding(const ModelVariant& v) {
  v.validate();
  return Embedding::from_spec(v.embedding, v.input_dim);
}

}  // namespace

Model::Model(const ModelVariant& variant)
    : variant_(variant),
      embedding_(checked_embedding(variant)),
      estimator_(embedding_.output_dim(), estimator_config_for(variant)),
      buffer_(embedding_.output_dim()) {
  variant_.input_dim = embedding_.input_dim();
}

Model::Model(const ModelVariant& variant, StreamingEstimator estimator)
    : variant_(variant),
      embedding_(checked_embedding(variant)),
      estimator_(std::move(estimator)),
      buffer_(embedding_.output_dim()) {
  variant_.input_dim = embedding_.input_dim();
  if (estimator_.dim() != embedding_.output_dim()) {
    fail(ErrorKind::kShape, "checkpointed estimator dimension does not match embedding");
  }
}

void Model::observe(std::span<const float> x_raw, std::int64_t label) {
  embedding_.apply(x_raw, buffer_);
  observe_embedded(buffer_, label);
}

void Model::observe_embedded(std::span<const float> phi, std::int64_t label) {
  if (released_) {
    fail(ErrorKind::kContract, "model was finalized with released scatter; cannot observe");
  }
  if (online_inverse_ && phi.size() == estimator_.dim()) {
    const bool pooled = estimator_.config().mode == EstimatorMode::kPooledWithinClass;
    std::uint64_t n = estimator_.total_count();
    const Eigen::VectorXd* center = &estimator_.global_mean();
    if (pooled) {
      const auto it = estimator_.classes().find(label);
      n = it == estimator_.classes().end() ? 0 : it->second.count;
      center = it == estimator_.classes().end() ? nullptr : &it->second.mean;
    }
    if (n > 0) {
      const Eigen::VectorXd delta =
          Eigen::Map<const Eigen::VectorXf>(phi.data(), static_cast<Eigen::Index>(phi.size()))
              .cast<double>() - *center;
      const double nd = static_cast<double>(n);
      sherman_morrison_update_in_place(*online_inverse_, delta, nd / (nd + 1.0));
    }
  }
  estimator_.observe(phi, label);
  stale_ = true;
}

void Model::enable_online_inverse() {
  if (!uses_precision(variant_.variant)) {
    fail(ErrorKind::kConfig, "online inverse only applies to Mahalanobis variants");
  }
  if (estimator_.total_count() != 0) {
    fail(ErrorKind::kContract, "enable the online inverse before the first observe()");
  }
  if (!(variant_.lambda > 0.0)) {
    fail(ErrorKind::kConfig, "online inverse needs lambda > 0");
  }
  const auto e = static_cast<Eigen::Index>(embed_dim());
  online_inverse_ = Eigen::MatrixXd::Identity(e, e) / variant_.lambda;
}

void Model::finalize(bool release_scatter) {
  if (estimator_.num_classes() == 0) {
    fail(ErrorKind::kEmptyModel, "no classes observed");
  }
  labels_.clear();
  const auto e = static_cast<Eigen::Index>(embed_dim());
  means_.resize(e, static_cast<Eigen::Index>(estimator_.num_classes()));
  Eigen::Index col = 0;
  for (const auto& [label, stats] : estimator_.classes()) {
    labels_.push_back(label);
    means_.col(col++) = stats.mean;
  }
  if (uses_precision(variant_.variant) && !released_) {
    const std::uint64_t n = estimator_.total_count();
    SymmetricMatrix cov =
        release_scatter ? estimator_.take_covariance() : estimator_.covariance();
    released_ = release_scatter;
    precision_.reset();
    ShrinkageResult shrink = oas_shrink(std::move(cov), n);
    rho_ = shrink.rho;
    mu_ = shrink.mu;
    precision_.emplace(PrecisionModel::build(std::move(shrink.shrunk), variant_.lambda));
    discriminants_ = means_;
    precision_->solve_in_place(discriminants_);
    offsets_ = (means_.array() * discriminants_.array()).colwise().sum().transpose();
  }
  stale_ = false;
}

bool Model::ready() const noexcept {
  if (estimator_.num_classes() == 0) return false;
  if (!uses_precision(variant_.variant)) return true;
  return (!stale_ && precision_.has_value()) || online_inverse_.has_value();
}

void Model::check_ready() const {
  if (estimator_.num_classes() == 0) {
    fail(ErrorKind::kEmptyModel, "no classes observed");
  }
  if (!ready()) {
    fail(ErrorKind::kContract, "model has unfinalized statistics; call finalize()");
  }
}

std::int64_t Model::predict(std::span<const float> x_raw) const {
  std::vector<float> phi(embed_dim());
  embedding_.apply(x_raw, phi);
  return predict_embedded(phi);
}

std::int64_t Model::argmin_mahalanobis(const Eigen::VectorXd& phi) const {
  // (phi - mu)^T P (phi - mu) = phi^T P phi - 2 phi^T P mu + mu^T P mu; the
  // first term is shared by all classes.
  const Eigen::VectorXd projections = discriminants_.transpose() * phi;
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    const double value = offsets_[i] - 2.0 * projections[i];
    if (value < best_value) {
      best_value = value;
      best = c;
    }
  }
  return labels_[best];
}

std::int64_t Model::predict_embedded(std::span<const float> phi) const {
  check_ready();
  if (phi.size() != embed_dim()) {
    fail(ErrorKind::kShape, "embedding has dimension " + std::to_string(phi.size()) +
                                ", expected " + std::to_string(embed_dim()));
  }
  const bool lower_is_better = uses_precision(variant_.variant);
  if (lower_is_better && !stale_ && precision_) {
    return argmin_mahalanobis(
        Eigen::Map<const Eigen::VectorXf>(phi.data(), static_cast<Eigen::Index>(phi.size()))
            .cast<double>());
  }
  const auto all = scores_embedded(phi);
  std::int64_t best_label = all.begin()->first;
  double best = all.begin()->second;
  // Map iteration is in ascending label order; strict comparison keeps the
  // smallest label on ties.
  for (const auto& [label, value] : all) {
    if (lower_is_better ? value < best : value > best) {
      best = value;
      best_label = label;
    }
  }
  return best_label;
}

std::map<std::int64_t, double> Model::scores(std::span<const float> x_raw) const {
  std::vector<float> phi(embed_dim());
  embedding_.apply(x_raw, phi);
  return scores_embedded(phi);
}

std::map<std::int64_t, double> Model::scores_embedded(std::span<const float> phi) const {
  check_ready();
  if (phi.size() != embed_dim()) {
    fail(ErrorKind::kShape, "embedding has dimension " + std::to_string(phi.size()) +
                                ", expected " + std::to_string(embed_dim()));
  }
  const Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXf>(phi.data(), static_cast<Eigen::Index>(phi.size()))
          .cast<double>();
  std::map<std::int64_t, double> out;
  const bool mahalanobis = uses_precision(variant_.variant);
  for (const auto& [label, stats] : estimator_.classes()) {
    if (!mahalanobis) {
      out.emplace(label, x.dot(stats.mean));
    } else if (!stale_ && precision_) {
      out.emplace(label, precision_->mahalanobis_sq(x - stats.mean));
    } else {
      const Eigen::VectorXd delta = x - stats.mean;
      out.emplace(label, std::max(0.0, delta.dot(*online_inverse_ * delta)));
    }
  }
  return out;
}

std::size_t Model::state_bytes() const noexcept {
  std::size_t bytes = estimator_.state_bytes() + embedding_.storage_bytes();
  if (precision_) bytes += precision_->storage_bytes();
  if (online_inverse_) {
    bytes += static_cast<std::size_t>(online_inverse_->size()) * sizeof(double);
  }
  return bytes;
}

}  // namespace randumb
