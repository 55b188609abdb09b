#include "randumb/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "randumb/classifier.hpp"
#include "randumb/errors.hpp"

namespace randumb {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string at_offset(const std::filesystem::path& path, std::size_t offset) {
  return path.string() + " at offset " + std::to_string(offset);
}

// Little-endian stream helpers for the checkpoint containers.
template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    fail(ErrorKind::kFormat, "checkpoint truncated at offset " +
                                 std::to_string(static_cast<long long>(in.tellg())));
  }
  return value;
}

void put_doubles(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

void get_doubles(std::istream& in, std::span<double> values) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size_bytes()));
  if (in.gcount() != static_cast<std::streamsize>(values.size_bytes())) {
    fail(ErrorKind::kFormat, "checkpoint payload truncated");
  }
}

void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4] = {};
  in.read(got, 4);
  if (in.gcount() != 4 || std::memcmp(got, magic, 4) != 0) {
    fail(ErrorKind::kFormat, std::string("bad magic, expected ") + magic + " at offset 0");
  }
  if (const auto version = get<std::uint32_t>(in); version != 1) {
    fail(ErrorKind::kFormat, std::string(magic) + ": unsupported version " +
                                 std::to_string(version));
  }
}

void write_magic(std::ostream& out, const char (&magic)[5]) {
  out.write(magic, 4);
  put<std::uint32_t>(out, 1);
}

Eigen::VectorXd read_vector(std::istream& in, std::size_t dim) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  get_doubles(in, {v.data(), dim});
  return v;
}

}  // namespace

DatasetDescriptor descriptor_for(const std::string& name) {
  DatasetDescriptor d;
  d.name = name;
  if (name == "mnist") {
    d.channels = 1; d.rows = 28; d.cols = 28;
    d.num_classes = 10;
    d.channel_means = {0.1307};
    d.channel_stds = {0.3081};
    d.train_count = 60000; d.test_count = 10000;
    d.default_lambda = 1e-6;
    d.augment_default = false;
  } else if (name == "cifar10" || name == "cifar100") {
    d.channels = 3; d.rows = 32; d.cols = 32;
    d.num_classes = name == "cifar10" ? 10 : 100;
    if (name == "cifar10") {
      d.channel_means = {0.4914, 0.4822, 0.4465};
      d.channel_stds = {0.2470, 0.2435, 0.2616};
    } else {
      d.channel_means = {0.5071, 0.4865, 0.4409};
      d.channel_stds = {0.2673, 0.2564, 0.2762};
    }
    d.train_count = 50000; d.test_count = 10000;
    d.default_lambda = 1e-5;
    d.augment_default = true;
  } else if (name == "tinyimagenet" || name == "miniimagenet") {
    d.channels = 3; d.rows = 32; d.cols = 32;
    d.num_classes = name == "tinyimagenet" ? 200 : 100;
    d.channel_means = {0.485, 0.456, 0.406};
    d.channel_stds = {0.229, 0.224, 0.225};
    d.train_count = name == "tinyimagenet" ? 100000 : 50000;
    d.test_count = 10000;
    d.default_lambda = 1e-4;
    d.augment_default = true;
  } else {
    fail(ErrorKind::kConfig, "unknown dataset '" + name + "'");
  }
  d.input_dim = d.channels * d.rows * d.cols;
  return d;
}

Image ImageSet::image(std::size_t i) const {
  const auto px = image_pixels(i);
  return Image{channels, rows, cols, {px.begin(), px.end()}};
}

ImageSet load_idx(const std::filesystem::path& images,
                  const std::filesystem::path& labels) {
  const auto img = read_file(images);
  if (img.size() < 4 || read_be32(img, 0) != 0x00000803) {
    fail(ErrorKind::kFormat, "bad IDX image magic in " + at_offset(images, 0));
  }
  if (img.size() < 16) fail(ErrorKind::kFormat, "truncated IDX header in " + at_offset(images, 4));
  ImageSet set;
  set.count = read_be32(img, 4);
  set.channels = 1;
  set.rows = read_be32(img, 8);
  set.cols = read_be32(img, 12);
  const std::size_t payload = set.count * set.rows * set.cols;
  if (img.size() - 16 < payload) {
    fail(ErrorKind::kFormat, "truncated IDX image payload in " + at_offset(images, img.size()) +
                                 ", expected " + std::to_string(16 + payload) + " bytes");
  }
  set.pixels.assign(img.begin() + 16, img.begin() + 16 + static_cast<std::ptrdiff_t>(payload));

  const auto lab = read_file(labels);
  if (lab.size() < 4 || read_be32(lab, 0) != 0x00000801) {
    fail(ErrorKind::kFormat, "bad IDX label magic in " + at_offset(labels, 0));
  }
  if (lab.size() < 8) fail(ErrorKind::kFormat, "truncated IDX header in " + at_offset(labels, 4));
  const std::size_t label_count = read_be32(lab, 4);
  if (label_count != set.count) {
    fail(ErrorKind::kFormat, "count mismatch: " + std::to_string(set.count) + " images vs " +
                                 std::to_string(label_count) + " labels (" +
                                 at_offset(labels, 4) + ")");
  }
  if (lab.size() - 8 < label_count) {
    fail(ErrorKind::kFormat, "truncated IDX label payload in " + at_offset(labels, lab.size()));
  }
  set.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(label_count));
  return set;
}

ImageSet load_cifar_binary(const std::filesystem::path& path, CifarLabel kind) {
  const auto bytes = read_file(path);
  const std::size_t label_bytes = kind == CifarLabel::kCifar10 ? 1 : 2;
  const std::size_t record = label_bytes + 3072;
  if (bytes.size() % record != 0) {
    fail(ErrorKind::kFormat, path.string() + ": size " + std::to_string(bytes.size()) +
                                 " is not a multiple of the " + std::to_string(record) +
                                 "-byte record (trailing bytes at offset " +
                                 std::to_string(bytes.size() - bytes.size() % record) + ")");
  }
  const std::size_t limit = kind == CifarLabel::kCifar100Fine     ? 100
                            : kind == CifarLabel::kCifar100Coarse ? 20
                                                                  : 256;
  ImageSet set;
  set.count = bytes.size() / record;
  set.channels = 3;
  set.rows = 32;
  set.cols = 32;
  set.pixels.resize(set.count * 3072);
  set.labels.resize(set.count);
  for (std::size_t i = 0; i < set.count; ++i) {
    const std::size_t base = i * record;
    const std::uint8_t label =
        kind == CifarLabel::kCifar100Fine ? bytes[base + 1] : bytes[base];
    if (label >= limit) {
      fail(ErrorKind::kFormat, "label " + std::to_string(label) + " out of range in " +
                                   at_offset(path, base));
    }
    set.labels[i] = label;
    std::memcpy(set.pixels.data() + i * 3072, bytes.data() + base + label_bytes, 3072);
  }
  return set;
}

FeatureSet read_feature_container(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 20;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "RDFB", 4) != 0) {
    fail(ErrorKind::kFormat, "bad RDFB magic at offset 0");
  }
  if (bytes.size() < kHeader) fail(ErrorKind::kFormat, "truncated RDFB header at offset 4");
  std::uint32_t version, count, dim;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&count, bytes.data() + 8, 4);
  std::memcpy(&dim, bytes.data() + 12, 4);
  if (version != 1) fail(ErrorKind::kFormat, "unsupported RDFB version " + std::to_string(version));
  if (bytes[16] != 0) {
    fail(ErrorKind::kFormat, "unsupported RDFB dtype tag " + std::to_string(bytes[16]) +
                                 " at offset 16");
  }
  if (bytes[17] != 0 || bytes[18] != 0 || bytes[19] != 0) {
    fail(ErrorKind::kFormat, "nonzero RDFB pad bytes at offset 17");
  }
  if (dim == 0) fail(ErrorKind::kFormat, "RDFB dim is zero at offset 12");
  const std::size_t values = std::size_t{count} * dim;
  const std::size_t expected = kHeader + values * 4 + std::size_t{count} * 4;
  if (bytes.size() < expected) {
    fail(ErrorKind::kFormat, "RDFB payload truncated: " + std::to_string(bytes.size()) +
                                 " bytes, header (N=" + std::to_string(count) + ", dim=" +
                                 std::to_string(dim) + ") needs " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    fail(ErrorKind::kFormat, "RDFB has trailing bytes at offset " + std::to_string(expected));
  }
  FeatureSet set;
  set.count = count;
  set.dim = dim;
  set.values.resize(values);
  set.labels.resize(count);
  std::memcpy(set.values.data(), bytes.data() + kHeader, values * 4);
  std::memcpy(set.labels.data(), bytes.data() + kHeader + values * 4, std::size_t{count} * 4);
  for (std::size_t i = 0; i < values; ++i) {
    if (!std::isfinite(set.values[i])) {
      fail(ErrorKind::kFormat, "non-finite feature value at offset " +
                                   std::to_string(kHeader + 4 * i));
    }
  }
  return set;
}

FeatureSet load_feature_file(const std::filesystem::path& path) {
  try {
    return read_feature_container(read_file(path));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

std::vector<std::uint8_t> encode_feature_container(const FeatureSet& set) {
  if (set.values.size() != set.count * set.dim || set.labels.size() != set.count) {
    fail(ErrorKind::kShape, "feature set sizes are inconsistent");
  }
  std::vector<std::uint8_t> out(20 + set.values.size() * 4 + set.labels.size() * 4, 0);
  std::memcpy(out.data(), "RDFB", 4);
  const std::uint32_t header[3] = {1, static_cast<std::uint32_t>(set.count),
                                   static_cast<std::uint32_t>(set.dim)};
  std::memcpy(out.data() + 4, header, sizeof(header));
  std::memcpy(out.data() + 20, set.values.data(), set.values.size() * 4);
  std::memcpy(out.data() + 20 + set.values.size() * 4, set.labels.data(), set.labels.size() * 4);
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureSet& set) {
  const auto bytes = encode_feature_container(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kFormat, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<float> normalize(const Image& image, const DatasetDescriptor& descriptor) {
  if (image.channels != descriptor.channels || image.rows != descriptor.rows ||
      image.cols != descriptor.cols || image.pixels.size() != image.size()) {
    fail(ErrorKind::kShape, "image geometry does not match descriptor " + descriptor.name);
  }
  if (descriptor.channel_means.size() != image.channels ||
      descriptor.channel_stds.size() != image.channels) {
    fail(ErrorKind::kConfig, "descriptor needs one mean and std per channel");
  }
  std::vector<float> out(image.size());
  const std::size_t plane = image.rows * image.cols;
  for (std::size_t c = 0; c < image.channels; ++c) {
    const double mean = descriptor.channel_means[c];
    const double std = descriptor.channel_stds[c];
    if (!(std != 0.0) || !std::isfinite(std)) {
      fail(ErrorKind::kConfig, "channel " + std::to_string(c) + " has zero std");
    }
    for (std::size_t p = 0; p < plane; ++p) {
      const double v = image.pixels[c * plane + p] / 255.0;
      out[c * plane + p] = static_cast<float>((v - mean) / std);
    }
  }
  return out;
}

void unit_normalize(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

Image flip_horizontal(const Image& image) {
  Image out = image;
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (std::size_t r = 0; r < image.rows; ++r) {
      auto* row = out.pixels.data() + (c * image.rows + r) * image.cols;
      std::reverse(row, row + image.cols);
    }
  }
  return out;
}

RawSample flip_horizontal(const RawSample& sample) {
  const auto* image = std::get_if<Image>(&sample.data);
  if (image == nullptr) {
    fail(ErrorKind::kUnsupported, "flip augmentation is undefined for feature vectors");
  }
  return RawSample{flip_horizontal(*image), sample.label, Origin::kFlipped};
}

std::string_view to_string(InputNorm norm) {
  return norm == InputNorm::kL2 ? "l2" : "none";
}

InputNorm parse_input_norm(std::string_view text) {
  if (text == "l2") return InputNorm::kL2;
  if (text == "none") return InputNorm::kNone;
  fail(ErrorKind::kConfig, "unknown input norm '" + std::string(text) + "'");
}

namespace {

std::filesystem::path first_existing(const std::vector<std::filesystem::path>& candidates) {
  for (const auto& p : candidates) {
    if (std::filesystem::exists(p)) return p;
  }
  fail(ErrorKind::kFormat, "data file not found: " + candidates.front().string());
}

ImageSet concat(std::vector<ImageSet> parts) {
  ImageSet out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    out.pixels.insert(out.pixels.end(), parts[i].pixels.begin(), parts[i].pixels.end());
    out.labels.insert(out.labels.end(), parts[i].labels.begin(), parts[i].labels.end());
    out.count += parts[i].count;
  }
  return out;
}

void check_labels(const ImageSet& set, const DatasetDescriptor& d) {
  for (std::size_t i = 0; i < set.count; ++i) {
    if (set.labels[i] < 0 || static_cast<std::size_t>(set.labels[i]) >= d.num_classes) {
      fail(ErrorKind::kFormat, "label " + std::to_string(set.labels[i]) + " at record " +
                                   std::to_string(i) + " outside [0, " +
                                   std::to_string(d.num_classes) + ")");
    }
  }
}

}  // namespace

Dataset load_dataset(const std::string& name, const std::filesystem::path& data_dir) {
  if (name.rfind("features/", 0) == 0) {
    const auto dir = data_dir / name.substr(9);
    Dataset ds;
    FeatureSet train = load_feature_file(dir / "train.rdfb");
    FeatureSet test = load_feature_file(dir / "test.rdfb");
    if (train.dim != test.dim) {
      fail(ErrorKind::kFormat, "train/test feature dimensions differ");
    }
    DatasetDescriptor& d = ds.descriptor;
    d.name = name;
    d.input_dim = train.dim;
    std::uint32_t max_label = 0;
    for (auto l : train.labels) max_label = std::max(max_label, l);
    d.num_classes = max_label + 1;
    d.train_count = train.count;
    d.test_count = test.count;
    d.default_lambda = 1e-4;
    d.augment_default = false;
    d.is_feature_file = true;
    ds.train = std::move(train);
    ds.test = std::move(test);
    return ds;
  }

  Dataset ds;
  ds.descriptor = descriptor_for(name);
  ImageSet train, test;
  if (name == "mnist") {
    const auto pick = [&](const char* file) {
      return first_existing({data_dir / "mnist" / file, data_dir / file});
    };
    train = load_idx(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"));
    test = load_idx(pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte"));
  } else if (name == "cifar10") {
    const auto dir = data_dir / "cifar-10-batches-bin";
    std::vector<ImageSet> parts;
    for (int b = 1; b <= 5; ++b) {
      parts.push_back(load_cifar_binary(
          first_existing({dir / ("data_batch_" + std::to_string(b) + ".bin")}),
          CifarLabel::kCifar10));
    }
    train = concat(std::move(parts));
    test = load_cifar_binary(first_existing({dir / "test_batch.bin"}), CifarLabel::kCifar10);
  } else if (name == "cifar100") {
    const auto dir = data_dir / "cifar-100-binary";
    train = load_cifar_binary(first_existing({dir / "train.bin"}), CifarLabel::kCifar100Fine);
    test = load_cifar_binary(first_existing({dir / "test.bin"}), CifarLabel::kCifar100Fine);
  } else {
    const auto dir = data_dir / name;
    train = load_cifar_binary(first_existing({dir / "train.bin"}), CifarLabel::kCifar10);
    test = load_cifar_binary(first_existing({dir / "test.bin"}), CifarLabel::kCifar10);
  }
  if (train.channels != ds.descriptor.channels || train.rows != ds.descriptor.rows ||
      train.cols != ds.descriptor.cols) {
    fail(ErrorKind::kFormat, name + ": image geometry does not match descriptor");
  }
  check_labels(train, ds.descriptor);
  check_labels(test, ds.descriptor);
  ds.descriptor.train_count = train.count;
  ds.descriptor.test_count = test.count;
  ds.train = std::move(train);
  ds.test = std::move(test);
  return ds;
}

std::size_t split_size(const std::variant<ImageSet, FeatureSet>& split) {
  return std::visit([](const auto& s) { return s.count; }, split);
}

std::int64_t split_label(const std::variant<ImageSet, FeatureSet>& split, std::size_t i) {
  return std::visit([i](const auto& s) { return static_cast<std::int64_t>(s.labels[i]); },
                    split);
}

std::vector<float> preprocess(const std::variant<ImageSet, FeatureSet>& split,
                              std::size_t index, bool flipped,
                              const DatasetDescriptor& descriptor, InputNorm norm) {
  std::vector<float> out;
  if (const auto* images = std::get_if<ImageSet>(&split)) {
    Image image = images->image(index);
    if (flipped) image = flip_horizontal(image);
    out = normalize(image, descriptor);
  } else {
    if (flipped) {
      fail(ErrorKind::kUnsupported, "flip augmentation is undefined for feature vectors");
    }
    const auto row = std::get<FeatureSet>(split).row(index);
    out.assign(row.begin(), row.end());
  }
  if (norm == InputNorm::kL2) unit_normalize(out);
  return out;
}

// --- Checkpoints ----------------------------------------------------------

void write_estimator(std::ostream& out, const StreamingEstimator& est) {
  write_magic(out, "RDES");
  const bool has_scatter = est.config().track_scatter;
  put<std::uint8_t>(out, static_cast<std::uint8_t>(est.config().mode));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(est.config().normalizer));
  put<std::uint8_t>(out, has_scatter ? 1 : 0);
  put<std::uint8_t>(out, 0);
  put<std::uint64_t>(out, est.dim());
  put<std::uint64_t>(out, est.total_count());
  put<std::uint64_t>(out, est.num_classes());
  put_doubles(out, {est.global_mean().data(), est.dim()});
  for (const auto& [label, stats] : est.classes()) {
    put<std::int64_t>(out, label);
    put<std::uint64_t>(out, stats.count);
    put_doubles(out, {stats.mean.data(), est.dim()});
  }
  if (has_scatter) put_doubles(out, est.scatter().rfp());
  if (!out) fail(ErrorKind::kFormat, "failed writing estimator checkpoint");
}

StreamingEstimator read_estimator(std::istream& in) {
  expect_magic(in, "RDES");
  EstimatorConfig config;
  const auto mode = get<std::uint8_t>(in);
  const auto normalizer = get<std::uint8_t>(in);
  const auto has_scatter = get<std::uint8_t>(in);
  get<std::uint8_t>(in);
  if (mode > 1 || normalizer > 1 || has_scatter > 1) {
    fail(ErrorKind::kFormat, "RDES: invalid mode/normalizer/scatter flag");
  }
  config.mode = static_cast<EstimatorMode>(mode);
  config.normalizer = static_cast<CovarianceNormalizer>(normalizer);
  config.track_scatter = has_scatter == 1;
  const auto dim = get<std::uint64_t>(in);
  const auto total = get<std::uint64_t>(in);
  const auto num_classes = get<std::uint64_t>(in);
  if (dim == 0) fail(ErrorKind::kFormat, "RDES: zero dimension");
  Eigen::VectorXd global = read_vector(in, dim);
  std::map<std::int64_t, ClassStats> classes;
  for (std::uint64_t c = 0; c < num_classes; ++c) {
    ClassStats stats;
    stats.class_id = get<std::int64_t>(in);
    stats.count = get<std::uint64_t>(in);
    stats.mean = read_vector(in, dim);
    if (!classes.emplace(stats.class_id, stats).second) {
      fail(ErrorKind::kFormat, "RDES: duplicate class label " + std::to_string(stats.class_id));
    }
  }
  SymmetricMatrix scatter;
  if (config.track_scatter) {
    scatter = SymmetricMatrix(dim);
    get_doubles(in, scatter.rfp());
  }
  return StreamingEstimator::restore(dim, config, total, std::move(global), std::move(classes),
                                     std::move(scatter));
}

void save_estimator_checkpoint(const std::filesystem::path& path,
                               const StreamingEstimator& est) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kFormat, "cannot write " + path.string());
  write_estimator(out, est);
}

StreamingEstimator load_estimator_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "cannot open " + path.string());
  try {
    return read_estimator(in);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

void save_shrinkage_checkpoint(const std::filesystem::path& path,
                               const ShrinkageResult& shrink, double lambda) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kFormat, "cannot write " + path.string());
  write_magic(out, "RDPS");
  put<std::uint64_t>(out, shrink.shrunk.size());
  put<double>(out, lambda);
  put<double>(out, shrink.rho);
  put<double>(out, shrink.mu);
  put_doubles(out, shrink.shrunk.rfp());
}

ShrinkageResult load_shrinkage_checkpoint(const std::filesystem::path& path, double& lambda) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "cannot open " + path.string());
  expect_magic(in, "RDPS");
  const auto dim = get<std::uint64_t>(in);
  lambda = get<double>(in);
  ShrinkageResult out;
  out.rho = get<double>(in);
  out.mu = get<double>(in);
  out.shrunk = SymmetricMatrix(dim);
  get_doubles(in, out.shrunk.rfp());
  return out;
}

void save_model_checkpoint(const std::filesystem::path& path, const Model& model) {
  const ModelVariant& v = model.variant();
  if (uses_precision(v.variant) && !model.estimator().config().track_scatter) {
    fail(ErrorKind::kContract, "model released its scatter; nothing to checkpoint");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kFormat, "cannot write " + path.string());
  write_magic(out, "RDMD");
  put<std::uint8_t>(out, static_cast<std::uint8_t>(v.variant));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(v.embedding.index()));
  put<std::uint16_t>(out, 0);
  put<double>(out, v.lambda);
  put<std::uint64_t>(out, v.input_dim);
  put<std::uint64_t>(out, v.estimator.update_block);
  if (const auto* rff = std::get_if<FeatureMapSpec>(&v.embedding)) {
    put<std::uint64_t>(out, rff->input_dim);
    put<std::uint64_t>(out, rff->num_bases);
    put<double>(out, rff->gamma);
    put<std::uint64_t>(out, rff->seed);
  } else if (const auto* rp = std::get_if<RPSpec>(&v.embedding)) {
    put<std::uint64_t>(out, rp->input_dim);
    put<std::uint64_t>(out, rp->output_dim);
    put<std::uint64_t>(out, rp->seed);
  }
  write_estimator(out, model.estimator());
}

Model load_model_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "cannot open " + path.string());
  try {
    expect_magic(in, "RDMD");
    ModelVariant v;
    const auto variant = get<std::uint8_t>(in);
    const auto kind = get<std::uint8_t>(in);
    get<std::uint16_t>(in);
    if (variant > 4 || kind > 2) fail(ErrorKind::kFormat, "RDMD: invalid variant or embedding tag");
    v.variant = static_cast<Variant>(variant);
    v.lambda = get<double>(in);
    v.input_dim = get<std::uint64_t>(in);
    const auto update_block = get<std::uint64_t>(in);
    if (kind == 1) {
      FeatureMapSpec spec;
      spec.input_dim = get<std::uint64_t>(in);
      spec.num_bases = get<std::uint64_t>(in);
      spec.gamma = get<double>(in);
      spec.seed = get<std::uint64_t>(in);
      v.embedding = spec;
    } else if (kind == 2) {
      RPSpec spec;
      spec.input_dim = get<std::uint64_t>(in);
      spec.output_dim = get<std::uint64_t>(in);
      spec.seed = get<std::uint64_t>(in);
      v.embedding = spec;
    }
    StreamingEstimator est = read_estimator(in);
    v.estimator = est.config();
    v.estimator.update_block = update_block;
    return Model(v, std::move(est));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

}  // namespace randumb
