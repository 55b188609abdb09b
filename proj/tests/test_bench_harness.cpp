#include <fstream>

#include "randumb/bench_harness.hpp"
#include "test_util.hpp"

using randumb::ErrorKind;
using randumb::FeatureSet;
using randumb::RunConfig;
using randumb::StreamSpec;

namespace {

// Blobs in feature space: class c is centered at 3 * e_c.
randumb::Dataset blob_dataset(std::size_t classes, std::size_t per_class_train,
                              std::size_t per_class_test, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> nd(0.0f, 0.5f);
  const std::size_t dim = classes + 2;
  auto make = [&](std::size_t per_class) {
    FeatureSet s;
    s.dim = dim;
    for (std::size_t i = 0; i < per_class * classes; ++i) {
      const auto c = static_cast<std::uint32_t>(i % classes);
      for (std::size_t j = 0; j < dim; ++j) s.values.push_back((j == c ? 3.0f : 0.0f) + nd(gen));
      s.labels.push_back(c);
      ++s.count;
    }
    return s;
  };
  randumb::Dataset ds;
  ds.descriptor.name = "blobs";
  ds.descriptor.input_dim = dim;
  ds.descriptor.num_classes = classes;
  ds.descriptor.is_feature_file = true;
  ds.descriptor.default_lambda = 1e-4;
  ds.train = make(per_class_train);
  ds.test = make(per_class_test);
  return ds;
}

RunConfig small_config(randumb::Variant v = randumb::Variant::kRanDumb) {
  RunConfig c;
  c.dataset = "blobs";
  c.variant = v;
  c.embed_dim = 64;
  c.input_norm = randumb::InputNorm::kNone;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("bench_harness") {

TEST_CASE("class-incremental stream order") {
  const auto ds = blob_dataset(2, 2, 1, 1);
  StreamSpec spec;
  spec.dataset = ds.descriptor;
  spec.classes_per_task = 1;
  spec.seed = 3;
  const auto stream = randumb::make_stream(spec, ds.train);
  REQUIRE(stream.size() == 4);
  CHECK(stream[0].label == 0);
  CHECK(stream[1].label == 0);
  CHECK(stream[2].label == 1);
  CHECK(stream[3].label == 1);
  CHECK(stream[2].task == 1);

  const auto again = randumb::make_stream(spec, ds.train);
  for (std::size_t i = 0; i < stream.size(); ++i) CHECK(again[i].index == stream[i].index);
}

TEST_CASE("tasks follow the class order and stay contiguous") {
  const auto ds = blob_dataset(10, 20, 1, 2);
  StreamSpec spec;
  spec.dataset = ds.descriptor;
  spec.class_order = {3, 1, 4, 0, 5, 9, 2, 6, 8, 7};
  spec.classes_per_task = 2;
  spec.seed = 11;
  const auto stream = randumb::make_stream(spec, ds.train);
  CHECK(stream.size() == 200);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::size_t task = i / 40;
    CHECK(stream[i].task == task);
    CHECK((stream[i].label == spec.class_order[2 * task] ||
           stream[i].label == spec.class_order[2 * task + 1]));
  }

  spec.class_order = {0, 1, 2};
  CHECK_ERROR_KIND(randumb::make_stream(spec, ds.train), ErrorKind::kConfig);
  spec.class_order = {};
  spec.augment = true;
  CHECK_ERROR_KIND(randumb::make_stream(spec, ds.train), ErrorKind::kConfig);
}

TEST_CASE("flipped copies follow their originals") {
  randumb::ImageSet images;
  images.count = 4;
  images.channels = 1;
  images.rows = 2;
  images.cols = 2;
  images.pixels.assign(16, 1);
  images.labels = {0, 1, 0, 1};
  auto desc = randumb::descriptor_for("mnist");
  desc.num_classes = 2;
  StreamSpec spec;
  spec.dataset = desc;
  spec.augment = true;
  const auto stream = randumb::make_stream(spec, images);
  REQUIRE(stream.size() == 8);
  for (std::size_t i = 0; i < 8; i += 2) {
    CHECK(stream[i].origin == randumb::Origin::kOriginal);
    CHECK(stream[i + 1].origin == randumb::Origin::kFlipped);
    CHECK(stream[i + 1].index == stream[i].index);
  }
}

TEST_CASE("accuracy by hand count") {
  const std::vector<std::int64_t> labels{0, 0, 1, 1};
  const auto r = randumb::compute_accuracy(std::vector<std::int64_t>{0, 1, 1, 1}, labels);
  CHECK(r.per_class.at(0).accuracy == 0.5);
  CHECK(r.per_class.at(1).accuracy == 1.0);
  CHECK(r.average == 0.75);
  CHECK(randumb::compute_accuracy(labels, labels).average == 1.0);
  CHECK_ERROR_KIND(randumb::compute_accuracy(std::vector<std::int64_t>{}, std::vector<std::int64_t>{}),
                   ErrorKind::kContract);
  CHECK_ERROR_KIND(randumb::compute_accuracy(std::vector<std::int64_t>{1}, labels), ErrorKind::kContract);
}

TEST_CASE("shuffled labels score near chance") {
  std::vector<std::int64_t> labels;
  for (int i = 0; i < 10000; ++i) labels.push_back(i % 10);
  auto shuffled = labels;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  CHECK(std::abs(randumb::compute_accuracy(shuffled, labels).average - 0.1) < 0.02);
}

TEST_CASE("benchmark on separable blobs") {
  const auto ds = blob_dataset(4, 100, 50, 3);
  for (auto v : {randumb::Variant::kRanDumb, randumb::Variant::kSlda, randumb::Variant::kNcm,
                 randumb::Variant::kKernelNcm, randumb::Variant::kRpRelu}) {
    auto cfg = small_config(v);
    const auto r = randumb::run_benchmark(cfg, ds);
    INFO(randumb::to_string(v));
    CHECK(r.average_accuracy > 0.9);
    CHECK(r.stream_length == 400);
    CHECK(r.observe_calls == 400);
    CHECK(r.per_class_accuracy.size() == 4);
    std::size_t correct = 0, count = 0;
    for (const auto& [label, c] : r.per_class_accuracy) {
      correct += c.correct;
      count += c.count;
    }
    CHECK(r.average_accuracy == static_cast<double>(correct) / static_cast<double>(count));
    CHECK(r.config.contains("lambda"));
    CHECK(r.config.at("stream_seed") == 5);
  }
}

TEST_CASE("runs are deterministic and class order does not matter") {
  const auto ds = blob_dataset(5, 60, 30, 4);
  auto cfg = small_config();
  const auto a = randumb::run_benchmark(cfg, ds);
  const auto b = randumb::run_benchmark(cfg, ds);
  CHECK(a.average_accuracy == b.average_accuracy);
  CHECK(a.per_class_accuracy.at(2).correct == b.per_class_accuracy.at(2).correct);

  cfg.class_order = {4, 2, 0, 3, 1};
  cfg.stream_seed = 99;
  const auto c = randumb::run_benchmark(cfg, ds);
  CHECK(std::abs(c.average_accuracy - a.average_accuracy) <= 1e-6);
}

TEST_CASE("single-class stream predicts that class") {
  auto ds = blob_dataset(3, 20, 10, 5);
  auto& train = std::get<FeatureSet>(ds.train);
  FeatureSet only;
  only.dim = train.dim;
  for (std::size_t i = 0; i < train.count; ++i) {
    if (train.labels[i] != 1) continue;
    const auto row = train.row(i);
    only.values.insert(only.values.end(), row.begin(), row.end());
    only.labels.push_back(0);
    ++only.count;
  }
  ds.train = only;
  ds.descriptor.num_classes = 1;
  const auto r = randumb::run_benchmark(small_config(randumb::Variant::kNcm), ds);
  REQUIRE(r.per_class_accuracy.size() == 1);
  CHECK(r.per_class_accuracy.at(0).accuracy == 1.0);
}

TEST_CASE("memory governor refuses oversized embeddings") {
  const auto ds = blob_dataset(2, 5, 5, 6);
  auto cfg = small_config();
  cfg.embed_dim = 200000;
  cfg.memory_cap_bytes = 1ull << 30;
  try {
    randumb::run_benchmark(cfg, ds);
    FAIL("expected refusal");
  } catch (const randumb::Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK(std::string(e.what()).find("8*E^2") != std::string::npos);
  }
}

TEST_CASE("intermediate curves with refactorization and with the online inverse") {
  const auto ds = blob_dataset(3, 30, 20, 7);
  auto cfg = small_config(randumb::Variant::kSlda);
  cfg.eval_every_k = 30;
  const auto refactor = randumb::run_benchmark(cfg, ds);
  CHECK(refactor.curve.size() == 3);
  CHECK(refactor.curve.front().seen_classes == 1);
  CHECK(refactor.curve.back().seen_classes == 3);

  cfg.online_inverse = true;
  cfg.lambda = 1e-2;
  const auto online = randumb::run_benchmark(cfg, ds);
  CHECK(online.curve.size() == 3);
  CHECK(online.average_accuracy > 0.9);
}

TEST_CASE("sweep and ablation") {
  const auto ds = blob_dataset(3, 30, 20, 8);
  const std::vector<std::size_t> same{20, 20};
  const auto s = randumb::sweep_embedding(same, small_config(), ds);
  REQUIRE(s.size() == 2);
  CHECK(s[0].average_accuracy == s[1].average_accuracy);
  const std::vector<std::size_t> odd{20, 21};
  CHECK_ERROR_KIND(randumb::sweep_embedding(odd, small_config(), ds), ErrorKind::kConfig);
  const std::vector<std::size_t> down{40, 20};
  CHECK_ERROR_KIND(randumb::sweep_embedding(down, small_config(), ds), ErrorKind::kConfig);

  const auto ab = randumb::run_ablation(small_config(), ds);
  REQUIRE(ab.size() == 5);
  CHECK(ab[0].config.at("variant") == "randumb");

  testutil::TempDir dir("results");
  randumb::append_jsonl(dir.path() / "r.jsonl", ab[0]);
  randumb::append_jsonl(dir.path() / "r.jsonl", ab[1]);
  randumb::write_csv(dir.path() / "r.csv", ab);
  std::ifstream jl(dir.path() / "r.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(jl, line)) {
    CHECK(nlohmann::json::parse(line).contains("average_accuracy"));
    ++lines;
  }
  CHECK(lines == 2);
  std::ifstream csv(dir.path() / "r.csv");
  lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 6);
}

TEST_CASE("config JSON round-trips and rejects unknown keys") {
  RunConfig c = small_config();
  c.lambda = 1e-5;
  c.augment = false;
  c.class_order = {1, 0};
  nlohmann::json j = c;
  RunConfig back;
  randumb::merge_from_json(j, back);
  CHECK(back.embed_dim == c.embed_dim);
  CHECK(back.lambda == c.lambda);
  CHECK(back.augment == c.augment);
  CHECK(back.class_order == c.class_order);
  CHECK(back.input_norm == c.input_norm);
  CHECK_ERROR_KIND(randumb::merge_from_json({{"embed_dims", 3}}, back), ErrorKind::kConfig);
  CHECK_ERROR_KIND(randumb::merge_from_json({{"embed_dim", "big"}}, back), ErrorKind::kConfig);
}

}
