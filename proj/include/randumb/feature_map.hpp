#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace randumb {

/// Parameters of the random Fourier basis. The output dimension is
/// 2 * num_bases (paired cosine/sine features).
struct FeatureMapSpec {
  std::size_t input_dim = 0;
  std::size_t num_bases = 0;
  double gamma = 1.0;
  std::uint64_t seed = 0;

  std::size_t output_dim() const noexcept { return 2 * num_bases; }

  /// Throws Error(kConfig) on zero dimensions or non-positive gamma.
  void validate() const;

  /// Builds a spec from the total embedding size; odd sizes are rejected.
  static FeatureMapSpec from_embedding_size(std::size_t input_dim,
                                            std::size_t embed_dim, double gamma,
                                            std::uint64_t seed);

  bool operator==(const FeatureMapSpec&) const = default;
};

using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Frozen random Fourier feature transform approximating
/// K(x, y) = exp(-gamma * |x - y|^2). Immutable after construction, so
/// embed() may be called concurrently.
class FeatureMap {
 public:
  /// Draws omegas ~ N(0, 2 * gamma * I) from GaussianRng(spec.seed), row by row.
  static FeatureMap sample(const FeatureMapSpec& spec);

  /// Rebuilds a map from omegas exported by export_omegas(). The spec's
  /// dimensions must match the file size.
  static FeatureMap import_omegas(const FeatureMapSpec& spec,
                                  const std::filesystem::path& path);

  const FeatureMapSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return spec_.input_dim; }
  std::size_t output_dim() const noexcept { return spec_.output_dim(); }
  const RowMatrixF& omegas() const noexcept { return omegas_; }

  /// out[2i] = cos(w_i . x) / sqrt(D), out[2i+1] = sin(w_i . x) / sqrt(D).
  void embed(std::span<const float> x, std::span<float> out) const;
  std::vector<float> embed(std::span<const float> x) const;

  /// Raw little-endian f32, D x d row-major, no header.
  void export_omegas(const std::filesystem::path& path) const;

  std::size_t storage_bytes() const noexcept {
    return static_cast<std::size_t>(omegas_.size()) * sizeof(float);
  }

 private:
  FeatureMap(FeatureMapSpec spec, RowMatrixF omegas)
      : spec_(spec), omegas_(std::move(omegas)) {}

  FeatureMapSpec spec_;
  RowMatrixF omegas_;
};

}  // namespace randumb
