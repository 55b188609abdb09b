#include "randumb/bench_harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "randumb/errors.hpp"
#include "randumb/rng.hpp"

namespace randumb {

std::vector<StreamItem> make_stream(const StreamSpec& spec,
                                    const std::variant<ImageSet, FeatureSet>& train) {
  const std::size_t num_classes = spec.dataset.num_classes;
  if (spec.classes_per_task == 0) fail(ErrorKind::kConfig, "classes_per_task must be >= 1");
  std::vector<std::int64_t> order = spec.class_order;
  if (order.empty()) {
    for (std::size_t c = 0; c < num_classes; ++c) order.push_back(static_cast<std::int64_t>(c));
  }
  std::vector<std::int64_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t c = 0; c < sorted.size(); ++c) {
    if (sorted.size() != num_classes || sorted[c] != static_cast<std::int64_t>(c)) {
      fail(ErrorKind::kConfig, "class_order must be a permutation of the " +
                                   std::to_string(num_classes) + " dataset classes");
    }
  }
  if (spec.augment && spec.dataset.is_feature_file) {
    fail(ErrorKind::kConfig, "flip augmentation is undefined for feature files");
  }

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  const std::size_t n = split_size(train);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = split_label(train, i);
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      fail(ErrorKind::kConfig, "training label " + std::to_string(label) + " outside dataset classes");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  GaussianRng rng(spec.seed);
  std::vector<StreamItem> stream;
  stream.reserve(spec.augment ? 2 * n : n);
  for (std::size_t first = 0, task = 0; first < order.size();
       first += spec.classes_per_task, ++task) {
    std::vector<std::size_t> members;
    const std::size_t last = std::min(order.size(), first + spec.classes_per_task);
    for (std::size_t k = first; k < last; ++k) {
      const auto& idx = by_class[static_cast<std::size_t>(order[k])];
      if (idx.empty()) {
        fail(ErrorKind::kConfig, "class " + std::to_string(order[k]) + " missing from train set");
      }
      members.insert(members.end(), idx.begin(), idx.end());
    }
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    for (std::size_t idx : members) {
      const auto label = split_label(train, idx);
      stream.push_back({idx, label, Origin::kOriginal, task});
      if (spec.augment) stream.push_back({idx, label, Origin::kFlipped, task});
    }
  }
  return stream;
}

AccuracyReport compute_accuracy(std::span<const std::int64_t> predictions,
                                std::span<const std::int64_t> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    fail(ErrorKind::kContract, "compute_accuracy needs equal-length, non-empty inputs");
  }
  AccuracyReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& cls = report.per_class[labels[i]];
    ++cls.count;
    if (predictions[i] == labels[i]) {
      ++cls.correct;
      ++correct;
    }
  }
  double sum = 0.0;
  for (auto& [label, cls] : report.per_class) {
    cls.accuracy = static_cast<double>(cls.correct) / static_cast<double>(cls.count);
    sum += cls.accuracy;
  }
  report.average = static_cast<double>(correct) / static_cast<double>(labels.size());
  report.class_average = sum / static_cast<double>(report.per_class.size());
  return report;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{
      {"dataset", c.dataset},
      {"data_dir", c.data_dir.string()},
      {"variant", std::string(to_string(c.variant))},
      {"embed_dim", c.embed_dim},
      {"gamma", c.gamma},
      {"seed", c.seed},
      {"classes_per_task", c.classes_per_task},
      {"class_order", c.class_order},
      {"estimator_mode", std::string(to_string(c.estimator_mode))},
      {"normalizer", std::string(to_string(c.normalizer))},
      {"input_norm", std::string(to_string(c.input_norm))},
      {"update_block", c.update_block},
      {"eval_every_k", c.eval_every_k},
      {"online_inverse", c.online_inverse},
      {"memory_cap_bytes", c.memory_cap_bytes},
      {"memory_warn_bytes", c.memory_warn_bytes},
      {"threads", c.threads},
      {"max_train", c.max_train},
      {"max_test", c.max_test},
  };
  j["lambda"] = c.lambda ? nlohmann::json(*c.lambda) : nlohmann::json(nullptr);
  j["stream_seed"] = c.stream_seed ? nlohmann::json(*c.stream_seed) : nlohmann::json(nullptr);
  j["augment"] = c.augment ? nlohmann::json(*c.augment) : nlohmann::json(nullptr);
}

void merge_from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "config must be a JSON object");
  static const std::set<std::string> known = {
      "dataset", "data_dir", "variant", "embed_dim", "gamma", "lambda", "seed",
      "stream_seed", "augment", "classes_per_task", "class_order", "estimator_mode",
      "normalizer", "input_norm", "update_block", "eval_every_k", "online_inverse",
      "memory_cap_bytes", "memory_warn_bytes", "threads", "max_train", "max_test"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
      if (value.is_null()) continue;
      if (key == "dataset") c.dataset = value.get<std::string>();
      else if (key == "data_dir") c.data_dir = value.get<std::string>();
      else if (key == "variant") c.variant = parse_variant(value.get<std::string>());
      else if (key == "embed_dim") c.embed_dim = value.get<std::size_t>();
      else if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "stream_seed") c.stream_seed = value.get<std::uint64_t>();
      else if (key == "augment") c.augment = value.get<bool>();
      else if (key == "classes_per_task") c.classes_per_task = value.get<std::size_t>();
      else if (key == "class_order") c.class_order = value.get<std::vector<std::int64_t>>();
      else if (key == "estimator_mode") c.estimator_mode = parse_estimator_mode(value.get<std::string>());
      else if (key == "normalizer") c.normalizer = parse_normalizer(value.get<std::string>());
      else if (key == "input_norm") c.input_norm = parse_input_norm(value.get<std::string>());
      else if (key == "update_block") c.update_block = value.get<std::size_t>();
      else if (key == "eval_every_k") c.eval_every_k = value.get<std::size_t>();
      else if (key == "online_inverse") c.online_inverse = value.get<bool>();
      else if (key == "memory_cap_bytes") c.memory_cap_bytes = value.get<std::uint64_t>();
      else if (key == "memory_warn_bytes") c.memory_warn_bytes = value.get<std::uint64_t>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else if (key == "max_train") c.max_train = value.get<std::size_t>();
      else if (key == "max_test") c.max_test = value.get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
}

nlohmann::json to_json(const RunResult& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, cls] : r.per_class_accuracy) {
    per_class[std::to_string(label)] = {
        {"correct", cls.correct}, {"count", cls.count}, {"accuracy", cls.accuracy}};
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"step", p.step}, {"seen_classes", p.seen_classes}, {"accuracy", p.accuracy}});
  }
  nlohmann::json j = {
      {"config", r.config},
      {"per_class_accuracy", per_class},
      {"average_accuracy", r.average_accuracy},
      {"class_average_accuracy", r.class_average_accuracy},
      {"wall_time_seconds", r.wall_time_seconds},
      {"peak_memory_estimate_bytes", r.peak_memory_estimate_bytes},
      {"stream_length", r.stream_length},
      {"observe_calls", r.observe_calls},
      {"state_bytes_after_first_task", r.state_bytes_after_first_task},
      {"state_bytes_final", r.state_bytes_final},
      {"curve", curve},
  };
  j["shrinkage_rho"] = r.shrinkage_rho ? nlohmann::json(*r.shrinkage_rho) : nlohmann::json(nullptr);
  return j;
}

ModelVariant model_variant_for(const RunConfig& config, const DatasetDescriptor& dataset) {
  ModelVariant mv;
  mv.variant = config.variant;
  mv.input_dim = dataset.input_dim;
  mv.lambda = config.lambda.value_or(dataset.default_lambda);
  mv.estimator.mode = config.estimator_mode;
  mv.estimator.normalizer = config.normalizer;
  mv.estimator.update_block = config.update_block;
  switch (config.variant) {
    case Variant::kRanDumb:
    case Variant::kKernelNcm:
      mv.embedding = FeatureMapSpec::from_embedding_size(dataset.input_dim, config.embed_dim,
                                                         config.gamma, config.seed);
      break;
    case Variant::kRpRelu:
      if (config.embed_dim == 0) fail(ErrorKind::kConfig, "embed_dim must be >= 1");
      mv.embedding = RPSpec{dataset.input_dim, config.embed_dim, config.seed};
      break;
    case Variant::kSlda:
    case Variant::kNcm:
      break;
  }
  mv.validate();
  return mv;
}

StreamSpec stream_spec_for(const RunConfig& config, const DatasetDescriptor& dataset) {
  StreamSpec spec;
  spec.dataset = dataset;
  spec.classes_per_task = config.classes_per_task;
  spec.class_order = config.class_order;
  spec.augment = config.augment.value_or(dataset.augment_default);
  spec.seed = config.stream_seed.value_or(config.seed);
  return spec;
}

std::uint64_t estimate_memory_bytes(const ModelVariant& variant, std::size_t num_classes) {
  std::size_t in = variant.input_dim;
  std::size_t e = in;
  std::uint64_t basis = 0;
  if (const auto* rff = std::get_if<FeatureMapSpec>(&variant.embedding)) {
    in = rff->input_dim;
    e = rff->output_dim();
    basis = std::uint64_t{rff->num_bases} * in * sizeof(float);
  } else if (const auto* rp = std::get_if<RPSpec>(&variant.embedding)) {
    in = rp->input_dim;
    e = rp->output_dim;
    basis = std::uint64_t{rp->output_dim} * in * sizeof(float);
  }
  std::uint64_t bytes = basis + std::uint64_t{num_classes + 4} * e * sizeof(double);
  if (uses_precision(variant.variant)) {
    bytes += SymmetricMatrix::storage_size(e) * sizeof(double);
    if (variant.estimator.update_block > 1) {
      bytes += std::uint64_t{variant.estimator.update_block} * e * sizeof(double);
    }
    bytes += 2 * std::uint64_t{num_classes} * e * sizeof(double);  // means + discriminants
  }
  return bytes;
}

std::uint64_t physical_memory_bytes() {
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page_size = sysconf(_SC_PAGE_SIZE);
  if (pages <= 0 || page_size <= 0) return 0;
  return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page_size);
}

namespace {

struct TestItems {
  std::vector<std::size_t> indices;
  std::vector<std::int64_t> labels;
};

TestItems test_items_for(const Dataset& ds, const std::set<std::int64_t>& seen,
                         std::size_t max_test) {
  TestItems items;
  std::size_t n = split_size(ds.test);
  if (max_test > 0) n = std::min(n, max_test);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = split_label(ds.test, i);
    if (seen.contains(label)) {
      items.indices.push_back(i);
      items.labels.push_back(label);
    }
  }
  return items;
}

std::vector<std::int64_t> predict_all(const Model& model, const Dataset& ds,
                                      const TestItems& items, InputNorm norm,
                                      std::size_t threads) {
  std::vector<std::int64_t> predictions(items.indices.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, items.indices.size()));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < items.indices.size(); i += workers) {
        const auto x = preprocess(ds.test, items.indices[i], false, ds.descriptor, norm);
        predictions[i] = model.predict(x);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return predictions;
}

std::string gib(std::uint64_t bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(bytes) / (1ull << 30) << " GiB";
  return os.str();
}

}  // namespace

RunResult run_benchmark(const RunConfig& config, const Dataset& dataset) {
  const auto start = std::chrono::steady_clock::now();
  const ModelVariant mv = model_variant_for(config, dataset.descriptor);
  const StreamSpec spec = stream_spec_for(config, dataset.descriptor);

  const std::uint64_t estimate = estimate_memory_bytes(mv, dataset.descriptor.num_classes);
  const std::uint64_t cap =
      config.memory_cap_bytes != 0 ? config.memory_cap_bytes : physical_memory_bytes();
  if (uses_precision(mv.variant)) {
    const std::uint64_t e = mv.variant == Variant::kSlda ? mv.input_dim
                            : std::holds_alternative<RPSpec>(mv.embedding)
                                ? std::get<RPSpec>(mv.embedding).output_dim
                                : std::get<FeatureMapSpec>(mv.embedding).output_dim();
    if (cap != 0 && estimate > cap) {
      fail(ErrorKind::kConfig,
           "embedding size " + std::to_string(e) + " needs about " + gib(estimate) +
               " (dense E x E covariance is 8*E^2 = " + gib(8 * e * e) +
               "; packed storage halves it) but the memory cap is " + gib(cap));
    }
    if (estimate > config.memory_warn_bytes) {
      std::cerr << "warning: run needs about " << gib(estimate) << " of memory\n";
    }
  }

  std::vector<StreamItem> stream = make_stream(spec, dataset.train);
  if (config.max_train > 0) {
    std::erase_if(stream, [&](const StreamItem& s) { return s.index >= config.max_train; });
  }

  Model model(mv);
  if (config.online_inverse) model.enable_online_inverse();

  RunResult result;
  std::set<std::int64_t> seen;
  for (std::size_t pos = 0; pos < stream.size(); ++pos) {
    const StreamItem& item = stream[pos];
    try {
      const auto x = preprocess(dataset.train, item.index, item.origin == Origin::kFlipped,
                                dataset.descriptor, config.input_norm);
      model.observe(x, item.label);
    } catch (const Error& e) {
      throw e.with_context("stream position " + std::to_string(pos));
    }
    ++result.observe_calls;
    seen.insert(item.label);
    const bool task_ends = pos + 1 == stream.size() || stream[pos + 1].task != item.task;
    if (task_ends && item.task == 0) result.state_bytes_after_first_task = model.state_bytes();
    if (config.eval_every_k > 0 && (pos + 1) % config.eval_every_k == 0) {
      if (!config.online_inverse) model.finalize(false);
      const TestItems items = test_items_for(dataset, seen, config.max_test);
      if (!items.indices.empty()) {
        const auto preds =
            predict_all(model, dataset, items, config.input_norm, config.threads);
        result.curve.push_back(
            {pos + 1, seen.size(), compute_accuracy(preds, items.labels).average});
      }
    }
  }
  if (result.observe_calls != stream.size() ||
      model.estimator().total_count() != stream.size()) {
    fail(ErrorKind::kContract, "one-pass contract violated: observe count differs from stream length");
  }
  result.state_bytes_final = model.state_bytes();

  try {
    model.finalize(true);
  } catch (const Error& e) {
    throw e.with_context("finalize after " + std::to_string(stream.size()) + " samples");
  }
  result.shrinkage_rho = model.shrinkage_rho();

  const TestItems items = test_items_for(dataset, seen, config.max_test);
  if (items.indices.empty()) fail(ErrorKind::kData, "no test samples for the seen classes");
  const auto predictions = predict_all(model, dataset, items, config.input_norm, config.threads);
  const AccuracyReport report = compute_accuracy(predictions, items.labels);

  result.per_class_accuracy = report.per_class;
  result.average_accuracy = report.average;
  result.class_average_accuracy = report.class_average;
  result.stream_length = stream.size();
  result.peak_memory_estimate_bytes = estimate;

  nlohmann::json echo = config;
  echo["lambda"] = mv.lambda;
  echo["augment"] = spec.augment;
  echo["stream_seed"] = spec.seed;
  echo["rng"] = std::string(GaussianRng::kName);
  echo["input_dim"] = dataset.descriptor.input_dim;
  echo["num_classes"] = dataset.descriptor.num_classes;
  echo["channel_means"] = dataset.descriptor.channel_means;
  echo["channel_stds"] = dataset.descriptor.channel_stds;
  echo["embed_dim_effective"] = model.embed_dim();
  result.config = std::move(echo);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<RunResult> sweep_embedding(std::span<const std::size_t> dims, const RunConfig& base,
                                       const Dataset& dataset, const ResultCallback& on_result) {
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i] % 2 != 0) {
      fail(ErrorKind::kConfig, "sweep dimension " + std::to_string(dims[i]) + " is not even");
    }
    if (i > 0 && dims[i] < dims[i - 1]) {
      fail(ErrorKind::kConfig, "sweep dimensions must be ascending");
    }
  }
  std::vector<RunResult> results;
  for (std::size_t dim : dims) {
    RunConfig cfg = base;
    cfg.embed_dim = dim;
    results.push_back(run_benchmark(cfg, dataset));
    if (on_result) on_result(results.back());
  }
  return results;
}

std::vector<RunResult> run_ablation(const RunConfig& base, const Dataset& dataset,
                                    std::vector<Variant> variants,
                                    const ResultCallback& on_result) {
  if (variants.empty()) {
    variants = {Variant::kRanDumb, Variant::kKernelNcm, Variant::kSlda, Variant::kNcm,
                Variant::kRpRelu};
  }
  std::vector<RunResult> results;
  for (Variant v : variants) {
    RunConfig cfg = base;
    cfg.variant = v;
    results.push_back(run_benchmark(cfg, dataset));
    if (on_result) on_result(results.back());
  }
  return results;
}

void append_jsonl(const std::filesystem::path& path, const RunResult& result) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorKind::kConfig, "cannot open " + path.string() + " for appending");
  out << to_json(result).dump() << '\n';
}

void write_csv(const std::filesystem::path& path, std::span<const RunResult> results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kConfig, "cannot open " + path.string());
  out << "dataset,variant,embed_dim,lambda,augment,average_accuracy,class_average_accuracy,"
         "wall_time_seconds\n";
  for (const auto& r : results) {
    const auto& c = r.config;
    out << c.value("dataset", "") << ',' << c.value("variant", "") << ','
        << c.value("embed_dim_effective", std::size_t{0}) << ',' << c.value("lambda", 0.0) << ','
        << (c.value("augment", false) ? "true" : "false") << ',' << std::setprecision(6)
        << r.average_accuracy << ',' << r.class_average_accuracy << ','
        << r.wall_time_seconds << '\n';
  }
}

}  // namespace randumb
