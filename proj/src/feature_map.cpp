#include "randumb/feature_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include "randumb/errors.hpp"
#include "randumb/rng.hpp"

namespace randumb {
namespace {

// Rows of omegas processed per block in embed().
constexpr Eigen::Index kBlockRows = 256;

static_assert(std::endian::native == std::endian::little,
              "raw f32 export assumes a little-endian host");

}  // namespace

void FeatureMapSpec::validate() const {
  if (input_dim == 0) fail(ErrorKind::kConfig, "input_dim must be >= 1");
  if (num_bases == 0) fail(ErrorKind::kConfig, "num_bases must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::kConfig, "gamma must be positive and finite");
  }
}

FeatureMapSpec FeatureMapSpec::from_embedding_size(std::size_t input_dim,
                                                   std::size_t embed_dim,
                                                   double gamma,
                                                   std::uint64_t seed) {
  if (embed_dim == 0 || embed_dim % 2 != 0) {
    fail(ErrorKind::kConfig, "embedding size must be a positive even number, got " +
                                 std::to_string(embed_dim));
  }
  FeatureMapSpec spec{input_dim, embed_dim / 2, gamma, seed};
  spec.validate();
  return spec;
}

FeatureMap FeatureMap::sample(const FeatureMapSpec& spec) {
  spec.validate();
  const double scale = std::sqrt(2.0 * spec.gamma);
  RowMatrixF omegas(static_cast<Eigen::Index>(spec.num_bases),
                    static_cast<Eigen::Index>(spec.input_dim));
  GaussianRng rng(spec.seed);
  for (Eigen::Index r = 0; r < omegas.rows(); ++r) {
    for (Eigen::Index c = 0; c < omegas.cols(); ++c) {
      omegas(r, c) = static_cast<float>(scale * rng.normal());
    }
  }
  return FeatureMap(spec, std::move(omegas));
}

FeatureMap FeatureMap::import_omegas(const FeatureMapSpec& spec,
                                     const std::filesystem::path& path) {
  spec.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "cannot open " + path.string());
  RowMatrixF omegas(static_cast<Eigen::Index>(spec.num_bases),
                    static_cast<Eigen::Index>(spec.input_dim));
  const auto bytes = static_cast<std::streamsize>(omegas.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(omegas.data()), bytes);
  if (in.gcount() != bytes) {
    fail(ErrorKind::kFormat, path.string() + ": truncated omega file at offset " +
                                 std::to_string(in.gcount()));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::kFormat, path.string() + ": trailing bytes after offset " +
                                 std::to_string(bytes));
  }
  return FeatureMap(spec, std::move(omegas));
}

void FeatureMap::embed(std::span<const float> x, std::span<float> out) const {
  if (x.size() != spec_.input_dim) {
    fail(ErrorKind::kShape, "embed: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(spec_.input_dim));
  }
  if (out.size() != output_dim()) {
    fail(ErrorKind::kShape, "embed: output buffer has dimension " +
                                std::to_string(out.size()) + ", expected " +
                                std::to_string(output_dim()));
  }
  const Eigen::Map<const Eigen::VectorXf> xv(x.data(),
                                             static_cast<Eigen::Index>(x.size()));
  const double norm = 1.0 / std::sqrt(static_cast<double>(spec_.num_bases));
  const Eigen::Index rows = omegas_.rows();
  // Each phase is an independent row dot product, so blocking does not
  // change any bit of the result.
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kBlockRows) {
    const Eigen::Index r1 = std::min(rows, r0 + kBlockRows);
    for (Eigen::Index r = r0; r < r1; ++r) {
      const double phase = static_cast<double>(omegas_.row(r).dot(xv));
      out[static_cast<std::size_t>(2 * r)] =
          static_cast<float>(std::cos(phase) * norm);
      out[static_cast<std::size_t>(2 * r + 1)] =
          static_cast<float>(std::sin(phase) * norm);
    }
  }
}

std::vector<float> FeatureMap::embed(std::span<const float> x) const {
  std::vector<float> out(output_dim());
  embed(x, out);
  return out;
}

void FeatureMap::export_omegas(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kFormat, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(omegas_.data()),
            static_cast<std::streamsize>(omegas_.size() * sizeof(float)));
  if (!out) fail(ErrorKind::kFormat, "write failed: " + path.string());
}

}  // namespace randumb
