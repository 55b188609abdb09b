#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "randumb/classifier.hpp"
#include "randumb/data_io.hpp"

namespace randumb {

/// Class-incremental stream: tasks of `classes_per_task` classes taken from
/// `class_order`; samples of a task are contiguous and seed-shuffled.
struct StreamSpec {
  DatasetDescriptor dataset;
  std::size_t classes_per_task = 1;
  /// Empty means 0, 1, ..., num_classes - 1.
  std::vector<std::int64_t> class_order;
  bool augment = false;
  std::uint64_t seed = 0;
};

struct StreamItem {
  std::size_t index = 0;  // position in the training split
  std::int64_t label = 0;
  Origin origin = Origin::kOriginal;
  std::size_t task = 0;
};

/// Deterministic sequence of training items; flipped copies directly follow
/// their originals. Throws Error(kConfig) if class_order is not a
/// permutation of the dataset classes or a class has no training samples.
std::vector<StreamItem> make_stream(const StreamSpec& spec,
                                    const std::variant<ImageSet, FeatureSet>& train);

struct ClassAccuracy {
  std::size_t correct = 0;
  std::size_t count = 0;
  double accuracy = 0.0;
};

struct AccuracyReport {
  std::map<std::int64_t, ClassAccuracy> per_class;
  double average = 0.0;        // total correct / total count
  double class_average = 0.0;  // mean of per-class accuracies
};

/// Throws Error(kContract) on empty or unequal-length input.
AccuracyReport compute_accuracy(std::span<const std::int64_t> predictions,
                                std::span<const std::int64_t> labels);

/// Everything that defines one run. Unset optionals fall back to the
/// dataset descriptor defaults.
struct RunConfig {
  std::string dataset = "mnist";
  std::filesystem::path data_dir;
  Variant variant = Variant::kRanDumb;
  std::size_t embed_dim = 25000;
  double gamma = 1.0;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> stream_seed;
  std::optional<bool> augment;
  std::size_t classes_per_task = 1;
  std::vector<std::int64_t> class_order;
  EstimatorMode estimator_mode = EstimatorMode::kPooledWithinClass;
  CovarianceNormalizer normalizer = CovarianceNormalizer::kNMinusOne;
  InputNorm input_norm = InputNorm::kL2;
  std::size_t update_block = 1;
  std::size_t eval_every_k = 0;
  bool online_inverse = false;
  /// 0 selects the machine's physical memory.
  std::uint64_t memory_cap_bytes = 0;
  std::uint64_t memory_warn_bytes = 16ull << 30;
  std::size_t threads = 1;
  /// Use only the first N items of each split (0 = all). For smoke runs.
  std::size_t max_train = 0;
  std::size_t max_test = 0;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Reads the keys present in `j` over the values already in `c`.
void merge_from_json(const nlohmann::json& j, RunConfig& c);

struct CurvePoint {
  std::size_t step = 0;
  std::size_t seen_classes = 0;
  double accuracy = 0.0;
};

struct RunResult {
  nlohmann::json config;  // echo of every setting, seed and constant used
  std::map<std::int64_t, ClassAccuracy> per_class_accuracy;
  double average_accuracy = 0.0;
  double class_average_accuracy = 0.0;
  double wall_time_seconds = 0.0;
  std::uint64_t peak_memory_estimate_bytes = 0;
  std::size_t stream_length = 0;
  std::size_t observe_calls = 0;
  std::size_t state_bytes_after_first_task = 0;
  std::size_t state_bytes_final = 0;
  std::optional<double> shrinkage_rho;
  std::vector<CurvePoint> curve;
};

nlohmann::json to_json(const RunResult& r);

/// Model specification implied by a run config for a given dataset.
ModelVariant model_variant_for(const RunConfig& config, const DatasetDescriptor& dataset);
StreamSpec stream_spec_for(const RunConfig& config, const DatasetDescriptor& dataset);

/// Estimated resident bytes of a model of this variant (RFP scatter,
/// pending block, embedding basis, class means).
std::uint64_t estimate_memory_bytes(const ModelVariant& variant, std::size_t num_classes);

/// Physical memory of the machine in bytes.
std::uint64_t physical_memory_bytes();

/// Streams every sample once through the model, finalizes, and scores the
/// test set restricted to the classes seen in the stream.
RunResult run_benchmark(const RunConfig& config, const Dataset& dataset);

/// Called after each run of a sweep or ablation completes.
using ResultCallback = std::function<void(const RunResult&)>;

/// One run per embedding size; sizes must be even and non-decreasing.
std::vector<RunResult> sweep_embedding(std::span<const std::size_t> dims,
                                       const RunConfig& base, const Dataset& dataset,
                                       const ResultCallback& on_result = {});

/// Runs `variants` (default: all five) on the same stream.
std::vector<RunResult> run_ablation(const RunConfig& base, const Dataset& dataset,
                                    std::vector<Variant> variants = {},
                                    const ResultCallback& on_result = {});

/// Appends one JSON object per line.
void append_jsonl(const std::filesystem::path& path, const RunResult& result);
/// Table with one row per run: variant, embed_dim, lambda, accuracy, time.
void write_csv(const std::filesystem::path& path, std::span<const RunResult> results);

}  // namespace randumb
