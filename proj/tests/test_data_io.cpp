#include <cmath>
#include <cstring>
#include <fstream>

#include "randumb/classifier.hpp"
#include "randumb/data_io.hpp"
#include "test_util.hpp"

using randumb::ErrorKind;
using randumb::FeatureSet;
using randumb::Image;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x803);
  put_be32(b, n);
  put_be32(b, rows);
  put_be32(b, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) b.push_back(static_cast<std::uint8_t>(i % 251));
  return b;
}

std::vector<std::uint8_t> idx_labels(std::uint32_t n) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x801);
  put_be32(b, n);
  for (std::uint32_t i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(i % 10));
  return b;
}

std::string error_message(auto&& fn) {
  try {
    fn();
  } catch (const randumb::Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("IDX images and labels load") {
  testutil::TempDir dir("idx");
  write_bytes(dir.path() / "img", idx_images(3, 28, 28));
  write_bytes(dir.path() / "lbl", idx_labels(3));
  const auto set = randumb::load_idx(dir.path() / "img", dir.path() / "lbl");
  CHECK(set.count == 3);
  CHECK(set.rows == 28);
  CHECK(set.cols == 28);
  CHECK(set.channels == 1);
  CHECK(set.labels == std::vector<std::int32_t>{0, 1, 2});
  CHECK(set.image_pixels(1)[0] == (784 % 251));
}

TEST_CASE("IDX format errors") {
  testutil::TempDir dir("idxbad");
  write_bytes(dir.path() / "img", idx_images(3, 28, 28));
  write_bytes(dir.path() / "lbl4", idx_labels(4));
  CHECK_ERROR_KIND(randumb::load_idx(dir.path() / "img", dir.path() / "lbl4"), ErrorKind::kFormat);

  write_bytes(dir.path() / "empty", {});
  write_bytes(dir.path() / "lbl", idx_labels(3));
  const auto msg = error_message([&] { randumb::load_idx(dir.path() / "empty", dir.path() / "lbl"); });
  CHECK(msg.find("magic") != std::string::npos);

  auto cut = idx_images(3, 28, 28);
  cut.resize(cut.size() - 10);
  write_bytes(dir.path() / "cut", cut);
  const auto cut_msg = error_message([&] { randumb::load_idx(dir.path() / "cut", dir.path() / "lbl"); });
  CHECK(cut_msg.find("offset") != std::string::npos);
}

TEST_CASE("MNIST files have the published sizes") {
  const char* env = std::getenv("RANDUMB_DATA_DIR");
  if (env == nullptr) return;
  const std::filesystem::path root = std::filesystem::path(env) / "mnist";
  if (!std::filesystem::exists(root / "train-images-idx3-ubyte")) return;
  CHECK(std::filesystem::file_size(root / "train-images-idx3-ubyte") == 16 + 60000ull * 784);
  const auto set = randumb::load_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte");
  CHECK(set.count == 60000);
  CHECK(set.rows == 28);
}

TEST_CASE("CIFAR binary records") {
  testutil::TempDir dir("cifar");
  std::vector<std::uint8_t> two(2 * 3073, 0);
  two[0] = 3;
  two[3073] = 9;
  two[1] = 200;  // first red pixel of record 0
  write_bytes(dir.path() / "b.bin", two);
  const auto set = randumb::load_cifar_binary(dir.path() / "b.bin", randumb::CifarLabel::kCifar10);
  CHECK(set.count == 2);
  CHECK(set.channels == 3);
  CHECK(set.labels == std::vector<std::int32_t>{3, 9});
  CHECK(set.image_pixels(0)[0] == 200);

  two.push_back(0);
  write_bytes(dir.path() / "odd.bin", two);
  CHECK_ERROR_KIND(randumb::load_cifar_binary(dir.path() / "odd.bin", randumb::CifarLabel::kCifar10),
                   ErrorKind::kFormat);

  std::vector<std::uint8_t> hundred(3074, 0);
  hundred[0] = 4;
  hundred[1] = 77;
  write_bytes(dir.path() / "c100.bin", hundred);
  CHECK(randumb::load_cifar_binary(dir.path() / "c100.bin", randumb::CifarLabel::kCifar100Fine).labels[0] == 77);
  CHECK(randumb::load_cifar_binary(dir.path() / "c100.bin", randumb::CifarLabel::kCifar100Coarse).labels[0] == 4);

  // Label range is checked against the dataset when it is loaded by name.
  two.pop_back();
  const auto batches = dir.path() / "cifar-10-batches-bin";
  std::filesystem::create_directories(batches);
  for (int b = 1; b <= 5; ++b) write_bytes(batches / ("data_batch_" + std::to_string(b) + ".bin"), two);
  write_bytes(batches / "test_batch.bin", two);
  const auto ds = randumb::load_dataset("cifar10", dir.path());
  CHECK(randumb::split_size(ds.train) == 10);
  two[0] = 10;
  write_bytes(batches / "test_batch.bin", two);
  CHECK_ERROR_KIND(randumb::load_dataset("cifar10", dir.path()), ErrorKind::kFormat);
}

TEST_CASE("feature container round-trips and rejects bad payloads") {
  // Hand-written N=3, dim=4 container.
  std::vector<std::uint8_t> bytes = {'R', 'D', 'F', 'B', 1, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0};
  std::vector<float> values;
  for (int i = 0; i < 12; ++i) values.push_back(0.25f * static_cast<float>(i) - 1.0f);
  const std::vector<std::uint32_t> labels{2, 0, 7};
  const auto* vp = reinterpret_cast<const std::uint8_t*>(values.data());
  bytes.insert(bytes.end(), vp, vp + 12 * sizeof(float));
  const auto* lp = reinterpret_cast<const std::uint8_t*>(labels.data());
  bytes.insert(bytes.end(), lp, lp + 3 * sizeof(std::uint32_t));

  const FeatureSet set = randumb::read_feature_container(bytes);
  CHECK(set.count == 3);
  CHECK(set.dim == 4);
  CHECK(set.values == values);
  CHECK(set.labels == labels);
  CHECK(randumb::encode_feature_container(set) == bytes);

  testutil::TempDir dir("rdfb");
  randumb::write_feature_file(dir.path() / "f.rdfb", set);
  CHECK(randumb::load_feature_file(dir.path() / "f.rdfb") == set);

  auto wrong = bytes;
  wrong[0] = 'X';
  CHECK_ERROR_KIND(randumb::read_feature_container(wrong), ErrorKind::kFormat);
  wrong = bytes;
  wrong[4] = 2;
  CHECK_ERROR_KIND(randumb::read_feature_container(wrong), ErrorKind::kFormat);
  wrong = bytes;
  wrong[16] = 1;  // dtype
  CHECK_ERROR_KIND(randumb::read_feature_container(wrong), ErrorKind::kFormat);
  wrong = bytes;
  const float nan = std::nanf("");
  std::memcpy(wrong.data() + 20, &nan, sizeof(float));
  CHECK_ERROR_KIND(randumb::read_feature_container(wrong), ErrorKind::kFormat);
  wrong = bytes;
  wrong.push_back(0);
  CHECK_ERROR_KIND(randumb::read_feature_container(wrong), ErrorKind::kFormat);

  // dim field 768 with a dim-512 payload.
  FeatureSet small{2, 512, std::vector<float>(1024, 0.5f), {0, 1}};
  auto enc = randumb::encode_feature_container(small);
  enc[12] = 0x00;
  enc[13] = 0x03;  // 768 little-endian
  const auto msg = error_message([&] { randumb::read_feature_container(enc); });
  CHECK(msg.find("truncat") != std::string::npos);
}

TEST_CASE("normalization") {
  auto desc = randumb::descriptor_for("mnist");
  desc.channel_means = {0.0};
  desc.channel_stds = {1.0};
  Image zero{1, 28, 28, std::vector<std::uint8_t>(784, 0)};
  const auto v = randumb::normalize(zero, desc);
  CHECK(v.size() == 784);
  CHECK(std::all_of(v.begin(), v.end(), [](float f) { return f == 0.0f; }));

  auto cifar = randumb::descriptor_for("cifar10");
  CHECK(cifar.input_dim == 3072);
  cifar.channel_means = {0.5, 0.5, 0.5};
  cifar.channel_stds = {0.5, 0.5, 0.5};
  Image full{3, 32, 32, std::vector<std::uint8_t>(3072, 255)};
  const auto w = randumb::normalize(full, cifar);
  CHECK(w.size() == 3072);
  CHECK(std::all_of(w.begin(), w.end(), [](float f) { return f == 1.0f; }));

  cifar.channel_stds[1] = 0.0;
  CHECK_ERROR_KIND(randumb::normalize(full, cifar), ErrorKind::kConfig);
  CHECK_ERROR_KIND(randumb::normalize(zero, randumb::descriptor_for("cifar10")), ErrorKind::kShape);

  std::vector<float> u{3, 4};
  randumb::unit_normalize(u);
  CHECK(u[0] == doctest::Approx(0.6));
  CHECK(u[1] == doctest::Approx(0.8));
  std::vector<float> z{0, 0};
  randumb::unit_normalize(z);
  CHECK(z[0] == 0.0f);
}

TEST_CASE("horizontal flip") {
  Image img{1, 2, 2, {1, 2, 3, 4}};
  CHECK(randumb::flip_horizontal(img).pixels == std::vector<std::uint8_t>{2, 1, 4, 3});
  Image sym{2, 1, 3, {5, 6, 5, 7, 8, 7}};
  CHECK(randumb::flip_horizontal(sym) == sym);
  Image rnd{3, 4, 5, {}};
  for (int i = 0; i < 60; ++i) rnd.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  CHECK(randumb::flip_horizontal(randumb::flip_horizontal(rnd)) == rnd);

  randumb::RawSample s{img, 3, randumb::Origin::kOriginal};
  const auto f = randumb::flip_horizontal(s);
  CHECK(f.origin == randumb::Origin::kFlipped);
  CHECK(f.label == 3);
  randumb::RawSample feat{std::vector<float>{1, 2}, 0, randumb::Origin::kOriginal};
  CHECK_ERROR_KIND(randumb::flip_horizontal(feat), ErrorKind::kUnsupported);
}

TEST_CASE("descriptors") {
  for (const char* name : {"mnist", "cifar10", "cifar100", "tinyimagenet", "miniimagenet"}) {
    const auto d = randumb::descriptor_for(name);
    CHECK(d.channel_means.size() == d.channels);
    CHECK(d.input_dim == d.channels * d.rows * d.cols);
  }
  CHECK(randumb::descriptor_for("cifar100").num_classes == 100);
  CHECK_ERROR_KIND(randumb::descriptor_for("svhn"), ErrorKind::kConfig);
}

TEST_CASE("feature-file datasets load from a directory") {
  testutil::TempDir dir("features");
  std::filesystem::create_directories(dir.path() / "vit");
  FeatureSet train{4, 3, {1, 0, 0, 0, 1, 0, 2, 0, 0, 0, 2, 0}, {0, 1, 0, 1}};
  FeatureSet test{2, 3, {1, 0, 0, 0, 1, 0}, {0, 1}};
  randumb::write_feature_file(dir.path() / "vit" / "train.rdfb", train);
  randumb::write_feature_file(dir.path() / "vit" / "test.rdfb", test);
  const auto ds = randumb::load_dataset("features/vit", dir.path());
  CHECK(ds.descriptor.input_dim == 3);
  CHECK(ds.descriptor.num_classes == 2);
  CHECK(ds.descriptor.is_feature_file);
  CHECK(randumb::split_size(ds.train) == 4);
  const auto x = randumb::preprocess(ds.train, 2, false, ds.descriptor, randumb::InputNorm::kNone);
  CHECK(x == std::vector<float>{2, 0, 0});
  CHECK_ERROR_KIND(randumb::preprocess(ds.train, 2, true, ds.descriptor, randumb::InputNorm::kNone),
                   ErrorKind::kUnsupported);
  CHECK_ERROR_KIND(randumb::load_dataset("mnist", dir.path()), ErrorKind::kFormat);
}

TEST_CASE("estimator and model checkpoints round-trip") {
  testutil::TempDir dir("ckpt");
  std::mt19937_64 gen(1);
  randumb::ModelVariant mv;
  mv.variant = randumb::Variant::kRanDumb;
  mv.input_dim = 5;
  mv.embedding = randumb::FeatureMapSpec::from_embedding_size(5, 24, 0.5, 9);
  mv.lambda = 1e-3;
  randumb::Model model(mv);
  for (int i = 0; i < 40; ++i) {
    const Eigen::VectorXd x = testutil::random_matrix(gen, 5, 1);
    std::vector<float> xf(x.data(), x.data() + 5);
    model.observe(xf, i % 4);
  }
  randumb::save_estimator_checkpoint(dir.path() / "e.rdes", model.estimator());
  const auto est = randumb::load_estimator_checkpoint(dir.path() / "e.rdes");
  CHECK(est.total_count() == 40);
  CHECK(est.scatter().to_dense() == model.estimator().scatter().to_dense());
  CHECK(est.class_means() == model.estimator().class_means());

  randumb::save_model_checkpoint(dir.path() / "m.rdmd", model);
  auto restored = randumb::load_model_checkpoint(dir.path() / "m.rdmd");
  model.finalize(false);
  restored.finalize(false);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd x = testutil::random_matrix(gen, 5, 1);
    std::vector<float> xf(x.data(), x.data() + 5);
    CHECK(model.scores(xf) == restored.scores(xf));
  }

  const auto shrink = randumb::oas_shrink(model.estimator().covariance(), 40);
  randumb::save_shrinkage_checkpoint(dir.path() / "p.rdps", shrink, 0.25);
  double lambda = 0;
  const auto back = randumb::load_shrinkage_checkpoint(dir.path() / "p.rdps", lambda);
  CHECK(lambda == 0.25);
  CHECK(back.rho == shrink.rho);
  CHECK(back.shrunk.to_dense() == shrink.shrunk.to_dense());

  model.finalize(true);
  CHECK_ERROR_KIND(randumb::save_model_checkpoint(dir.path() / "x.rdmd", model), ErrorKind::kContract);
  std::filesystem::resize_file(dir.path() / "e.rdes", 30);
  CHECK_ERROR_KIND(randumb::load_estimator_checkpoint(dir.path() / "e.rdes"), ErrorKind::kFormat);
}

}
