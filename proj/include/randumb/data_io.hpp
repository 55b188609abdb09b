#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "randumb/precision.hpp"
#include "randumb/streaming_estimator.hpp"

namespace randumb {

class Model;
struct ModelVariant;

enum class Origin : std::uint8_t { kOriginal = 0, kFlipped = 1 };

/// Channel-major u8 image (C planes of rows x cols).
struct Image {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const noexcept { return channels * rows * cols; }
  bool operator==(const Image&) const = default;
};

/// A training or test item before normalization: an image, or a
/// precomputed feature vector read from an RDFB file.
struct RawSample {
  std::variant<Image, std::vector<float>> data;
  std::int64_t label = 0;
  Origin origin = Origin::kOriginal;
};

/// Flattened, normalized vector fed to a model.
struct LabeledSample {
  std::vector<float> features;
  std::int64_t label = 0;
  Origin origin = Origin::kOriginal;
};

struct DatasetDescriptor {
  std::string name;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> channel_means;
  std::vector<double> channel_stds;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  /// Ridge parameter used when none is configured.
  double default_lambda = 1e-6;
  /// Whether horizontal flips are added by default.
  bool augment_default = false;
  bool is_feature_file = false;
};

/// Built-in descriptors: mnist, cifar10, cifar100, tinyimagenet,
/// miniimagenet. Throws Error(kConfig) for unknown names.
DatasetDescriptor descriptor_for(const std::string& name);

/// Images plus labels, N x C x H x W.
struct ImageSet {
  std::size_t count = 0;
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::int32_t> labels;

  std::size_t image_size() const noexcept { return channels * rows * cols; }
  std::span<const std::uint8_t> image_pixels(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
  }
  Image image(std::size_t i) const;
};

struct FeatureSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // count x dim, row-major
  std::vector<std::uint32_t> labels;

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  bool operator==(const FeatureSet&) const = default;
};

// --- Loaders --------------------------------------------------------------

/// IDX image tensor (magic 0x00000803) and label vector (0x00000801),
/// big-endian headers. Counts must agree.
ImageSet load_idx(const std::filesystem::path& images,
                  const std::filesystem::path& labels);

enum class CifarLabel { kCifar10, kCifar100Coarse, kCifar100Fine };

/// CIFAR binary batch: records of 1 (CIFAR-10) or 2 (CIFAR-100: coarse,
/// fine) label bytes followed by 3072 pixel bytes in R, G, B planes.
ImageSet load_cifar_binary(const std::filesystem::path& path, CifarLabel kind);

/// RDFB container: "RDFB", u32 version=1, u32 N, u32 dim, u8 dtype (0=f32),
/// 3 zero pad bytes, N*dim f32, N u32 labels; all little-endian.
FeatureSet load_feature_file(const std::filesystem::path& path);
FeatureSet read_feature_container(std::span<const std::uint8_t> bytes);
void write_feature_file(const std::filesystem::path& path, const FeatureSet& set);
std::vector<std::uint8_t> encode_feature_container(const FeatureSet& set);

// --- Preprocessing --------------------------------------------------------

/// pixel / 255, then (v - mean_c) / std_c per channel; channel-major flatten.
/// Throws Error(kShape) on a geometry mismatch, Error(kConfig) on a zero std.
std::vector<float> normalize(const Image& image, const DatasetDescriptor& descriptor);

/// Scales `v` to unit Euclidean norm (zero vectors are left unchanged).
void unit_normalize(std::span<float> v);

/// Mirrors every channel left-right; origin becomes kFlipped. Throws
/// Error(kUnsupported) for feature-vector samples.
RawSample flip_horizontal(const RawSample& sample);
Image flip_horizontal(const Image& image);

enum class InputNorm { kNone, kL2 };
std::string_view to_string(InputNorm norm);
InputNorm parse_input_norm(std::string_view text);

/// Train/test pair with the descriptor used to preprocess both.
struct Dataset {
  DatasetDescriptor descriptor;
  std::variant<ImageSet, FeatureSet> train;
  std::variant<ImageSet, FeatureSet> test;
};

/// Loads a named dataset from `data_dir`:
///   mnist         [mnist/]{train,t10k}-{images-idx3,labels-idx1}-ubyte
///   cifar10       cifar-10-batches-bin/{data_batch_1..5,test_batch}.bin
///   cifar100      cifar-100-binary/{train,test}.bin (fine labels)
///   tinyimagenet, miniimagenet
///                 <name>/{train,test}.bin, CIFAR-10 record layout, 32x32
///   features/<d>  <d>/{train,test}.rdfb
Dataset load_dataset(const std::string& name, const std::filesystem::path& data_dir);

std::size_t split_size(const std::variant<ImageSet, FeatureSet>& split);
std::int64_t split_label(const std::variant<ImageSet, FeatureSet>& split, std::size_t i);

/// Flip (optional), normalize, flatten, then apply `norm`.
std::vector<float> preprocess(const std::variant<ImageSet, FeatureSet>& split,
                              std::size_t index, bool flipped,
                              const DatasetDescriptor& descriptor, InputNorm norm);

// --- Checkpoints ----------------------------------------------------------
//
// Little-endian containers sharing the RDFB conventions:
//   RDES  estimator: "RDES", u32 version=1, u8 mode, u8 normalizer,
//         u8 has_scatter, u8 pad, u64 dim, u64 total_count, u64 num_classes,
//         f64[dim] global mean, num_classes x (i64 label, u64 count,
//         f64[dim] mean), then f64[dim(dim+1)/2] scatter in RFP order.
//   RDPS  shrunk precision input: "RDPS", u32 version=1, u64 dim,
//         f64 lambda, f64 rho, f64 mu, f64[dim(dim+1)/2] shrunk (RFP).
//   RDMD  model: "RDMD", u32 version=1, u8 variant, u8 embedding kind
//         (0 none, 1 fourier, 2 rp), u16 pad, f64 lambda, u64 input_dim,
//         u64 update_block, embedding fields (fourier: u64 input_dim,
//         u64 num_bases, f64 gamma, u64 seed; rp: u64 input_dim,
//         u64 output_dim, u64 seed), then an RDES block.

void write_estimator(std::ostream& out, const StreamingEstimator& est);
StreamingEstimator read_estimator(std::istream& in);
void save_estimator_checkpoint(const std::filesystem::path& path,
                               const StreamingEstimator& est);
StreamingEstimator load_estimator_checkpoint(const std::filesystem::path& path);

void save_shrinkage_checkpoint(const std::filesystem::path& path,
                               const ShrinkageResult& shrink, double lambda);
/// Returns the shrinkage result and writes the stored lambda to `lambda`.
ShrinkageResult load_shrinkage_checkpoint(const std::filesystem::path& path,
                                          double& lambda);

/// The model must not have released its scatter.
void save_model_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_model_checkpoint(const std::filesystem::path& path);

}  // namespace randumb
