#include "randumb/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "randumb/classifier.hpp"
#include "randumb/feature_map.hpp"
#include "randumb/precision.hpp"
#include "randumb/rng.hpp"
#include "randumb/streaming_estimator.hpp"

namespace randumb::checks {

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return max_abs(got - want) / std::max(max_abs(want), 1e-300);
}

Eigen::MatrixXd random_matrix(GaussianRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd random_spd(GaussianRng& rng, Eigen::Index dim) {
  const Eigen::MatrixXd a = random_matrix(rng, dim, dim + 5);
  return a * a.transpose() / static_cast<double>(dim + 5);
}

struct Stream {
  Eigen::MatrixXd samples;
  std::vector<std::int64_t> labels;
};

// Class-dependent offsets on top of a common shift so pooled and global
// scatter differ and cancellation is exercised.
Stream random_stream(GaussianRng& rng, Eigen::Index n, Eigen::Index dim, int classes) {
  const Eigen::MatrixXd centers = random_matrix(rng, classes, dim) * 2.0;
  Stream s{random_matrix(rng, n, dim), std::vector<std::int64_t>(static_cast<std::size_t>(n))};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(classes)));
    s.labels[static_cast<std::size_t>(i)] = c;
    s.samples.row(i) += centers.row(c);
    s.samples.row(i).array() += 5.0;
  }
  return s;
}

StreamingEstimator stream_into(const Stream& s, const std::vector<Eigen::Index>& order,
                               EstimatorConfig config) {
  StreamingEstimator est(static_cast<std::size_t>(s.samples.cols()), config);
  Eigen::VectorXd row(s.samples.cols());
  for (Eigen::Index i : order) {
    row = s.samples.row(i).transpose();
    est.observe(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                s.labels[static_cast<std::size_t>(i)]);
  }
  return est;
}

double mean_kernel_error(GaussianRng& rng, std::size_t num_bases, std::uint64_t seed,
                         int pairs) {
  constexpr std::size_t kDim = 10;
  const auto map = FeatureMap::sample({kDim, num_bases, 1.0, seed});
  double total = 0.0;
  std::vector<float> x(kDim), y(kDim);
  for (int p = 0; p < pairs; ++p) {
    Eigen::VectorXd xd(kDim), yd(kDim);
    for (std::size_t i = 0; i < kDim; ++i) {
      x[i] = static_cast<float>(0.3 * rng.normal());
      y[i] = static_cast<float>(0.3 * rng.normal());
      xd[static_cast<Eigen::Index>(i)] = x[i];
      yd[static_cast<Eigen::Index>(i)] = y[i];
    }
    const auto px = map.embed(x);
    const auto py = map.embed(y);
    double dot = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) dot += double{px[i]} * double{py[i]};
    total += std::abs(dot - oracle::exact_rbf_kernel(xd, yd, 1.0));
  }
  return total / pairs;
}

}  // namespace

std::vector<OracleReport> streaming_vs_batch(std::uint64_t seed, int num_streams) {
  GaussianRng rng(seed);
  double mean_err = 0.0, cov_err = 0.0, perm_err = 0.0;
  for (int t = 0; t < num_streams; ++t) {
    const auto dim = static_cast<Eigen::Index>(2 + rng.below(49));
    const int classes = 1 + static_cast<int>(rng.below(10));
    const auto n = static_cast<Eigen::Index>(classes + 2 + rng.below(5000 - classes - 2));
    const Stream s = random_stream(rng, n, dim, classes);

    EstimatorConfig config;
    config.mode = t % 2 == 0 ? EstimatorMode::kPooledWithinClass : EstimatorMode::kGlobal;
    config.normalizer = (t / 2) % 2 == 0 ? CovarianceNormalizer::kNMinusOne
                                         : CovarianceNormalizer::kNMinusClasses;
    config.update_block = t % 3 == 0 ? 1 + rng.below(64) : 1;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const StreamingEstimator est = stream_into(s, order, config);

    // Labels actually drawn may be fewer than `classes`; n - C uses the seen count.
    const auto batch = oracle::batch_stats(
        s.samples, s.labels,
        config.mode == EstimatorMode::kGlobal ? oracle::StatsMode::kGlobal
                                              : oracle::StatsMode::kPooled,
        config.normalizer == CovarianceNormalizer::kNMinusClasses);

    const auto means = est.class_means();
    for (const auto& [label, mean] : batch.means) {
      mean_err = std::max(mean_err, relative_error(means.at(label), mean));
    }
    const Eigen::MatrixXd cov = est.covariance().to_dense();
    cov_err = std::max(cov_err, relative_error(cov, batch.covariance));

    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const StreamingEstimator shuffled = stream_into(s, order, config);
    perm_err = std::max(perm_err, relative_error(shuffled.covariance().to_dense(), cov));
    const auto shuffled_means = shuffled.class_means();
    for (const auto& [label, mean] : means) {
      perm_err = std::max(perm_err, relative_error(shuffled_means.at(label), mean));
    }
  }
  return {oracle::make_report("streaming_means_vs_batch", mean_err, 1e-8),
          oracle::make_report("streaming_covariance_vs_batch", cov_err, 1e-8),
          oracle::make_report("stream_permutation_invariance", perm_err, 1e-8)};
}

std::vector<OracleReport> rff_kernel(std::uint64_t seed) {
  GaussianRng rng(seed);
  const double err_5000 = mean_kernel_error(rng, 5000, seed + 1, 100);
  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    err_small += mean_kernel_error(rng, 100, seed + 10 + s, 100);
    err_large += mean_kernel_error(rng, 10000, seed + 20 + s, 100);
  }
  // The second report passes when the large-D error is below the small-D
  // error, i.e. their ratio is below 1.
  return {oracle::make_report("rff_kernel_mean_error_D5000", err_5000, 0.02),
          oracle::make_report("rff_error_ratio_D10000_over_D100", err_large / err_small,
                              1.0 - 1e-12)};
}

std::vector<OracleReport> oas(std::uint64_t seed) {
  GaussianRng rng(seed);
  double range_violation = 0.0, fixed_point = 0.0, rho_err = 0.0, shrunk_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto dim = static_cast<Eigen::Index>(2 + rng.below(49));
    // Include n < dim, where the sample covariance is rank deficient.
    const auto n = static_cast<Eigen::Index>(2 + rng.below(120));
    const Eigen::MatrixXd x = random_matrix(rng, n, dim) * (0.1 + 3.0 * rng.uniform());
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n - 1);
    s = 0.5 * (s + s.transpose());
    const auto got = oas_shrink(s, static_cast<std::uint64_t>(n));
    range_violation = std::max({range_violation, -got.rho, got.rho - 1.0});

    const auto want = oracle::textbook_oas(s, static_cast<double>(n));
    rho_err = std::max(rho_err, std::abs(got.rho - want.rho));
    shrunk_err = std::max(shrunk_err, relative_error(got.shrunk.to_dense(), want.shrunk));

    const double sigma2 = 0.01 + 10.0 * rng.uniform();
    const Eigen::MatrixXd iso = sigma2 * Eigen::MatrixXd::Identity(dim, dim);
    const auto kept = oas_shrink(iso, static_cast<std::uint64_t>(n));
    fixed_point = std::max(fixed_point, relative_error(kept.shrunk.to_dense(), iso));
  }
  for (int t = 0; t < 50; ++t) {
    const auto dim = static_cast<Eigen::Index>(2 + rng.below(49));
    const auto n = static_cast<Eigen::Index>(2 + rng.below(200));
    const Eigen::MatrixXd s = random_spd(rng, dim);
    const auto got = oas_shrink(s, static_cast<std::uint64_t>(n));
    const auto want = oracle::textbook_oas(s, static_cast<double>(n));
    range_violation = std::max({range_violation, -got.rho, got.rho - 1.0});
    rho_err = std::max(rho_err, std::abs(got.rho - want.rho));
    shrunk_err = std::max(shrunk_err, relative_error(got.shrunk.to_dense(), want.shrunk));
  }
  return {oracle::make_report("oas_rho_in_unit_interval", range_violation, 0.0),
          oracle::make_report("oas_scaled_identity_fixed_point", fixed_point, 1e-12),
          oracle::make_report("oas_rho_vs_textbook", rho_err, 1e-10),
          oracle::make_report("oas_shrunk_vs_textbook", shrunk_err, 1e-10)};
}

std::vector<OracleReport> sherman_morrison(std::uint64_t seed) {
  GaussianRng rng(seed);
  constexpr Eigen::Index kDim = 30;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(kDim, kDim);
  Eigen::MatrixXd inv = a;
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd u = random_matrix(rng, kDim, 1);
    const double c = 0.1 + rng.uniform();
    sherman_morrison_update_in_place(inv, u, c);
    a += c * u * u.transpose();
  }
  return {oracle::make_report("sherman_morrison_200_updates_E30",
                              max_abs(inv - oracle::dense_inverse(a)), 1e-6)};
}

std::vector<OracleReport> lda_equivalence(std::uint64_t seed) {
  GaussianRng rng(seed);
  constexpr std::size_t kDim = 10;
  constexpr int kClasses = 3;
  constexpr int kPerClass = 100;
  constexpr double kLambda = 1e-6;

  ModelVariant mv;
  mv.variant = Variant::kSlda;
  mv.input_dim = kDim;
  mv.lambda = kLambda;
  Model model(mv);

  const Eigen::MatrixXd centers = random_matrix(rng, kClasses, kDim);
  const Eigen::MatrixXd mixing = random_matrix(rng, kDim, kDim);
  Eigen::MatrixXd train(kClasses * kPerClass, kDim);
  std::vector<std::int64_t> labels;
  std::vector<float> x(kDim);
  for (int i = 0; i < kClasses * kPerClass; ++i) {
    const int c = i % kClasses;
    const Eigen::VectorXd v = centers.row(c).transpose() + 0.7 * mixing * random_matrix(rng, kDim, 1);
    for (std::size_t j = 0; j < kDim; ++j) {
      x[j] = static_cast<float>(v[static_cast<Eigen::Index>(j)]);
      train(i, static_cast<Eigen::Index>(j)) = x[j];
    }
    model.observe(x, c);
    labels.push_back(c);
  }
  model.finalize();

  const auto batch = oracle::batch_stats(train, labels, oracle::StatsMode::kPooled);
  const auto shrunk = oracle::textbook_oas(batch.covariance, static_cast<double>(train.rows()));
  int disagreements = 0, scale_changes = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd v = centers.row(t % kClasses).transpose() +
                              1.5 * mixing * random_matrix(rng, kDim, 1);
    Eigen::VectorXd xd(kDim);
    for (std::size_t j = 0; j < kDim; ++j) {
      x[j] = static_cast<float>(v[static_cast<Eigen::Index>(j)]);
      xd[static_cast<Eigen::Index>(j)] = x[j];
    }
    const auto want = oracle::batch_lda_predict(batch.means, shrunk.shrunk, kLambda, xd);
    if (model.predict(x) != want) ++disagreements;
    const double c = 0.01 + 100.0 * rng.uniform();
    if (oracle::batch_lda_predict(batch.means, c * shrunk.shrunk, c * kLambda, xd) != want) {
      ++scale_changes;
    }
  }
  return {oracle::make_report("lda_equivalence_disagreements_of_1000", disagreements, 0.0),
          oracle::make_report("lda_scale_invariance_changes_of_1000", scale_changes, 0.0)};
}

std::vector<OracleReport> run_all(std::uint64_t seed) {
  std::vector<OracleReport> all;
  for (auto part : {streaming_vs_batch(seed), rff_kernel(seed + 1), oas(seed + 2),
                    sherman_morrison(seed + 3), lda_equivalence(seed + 4)}) {
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

nlohmann::json to_json(const OracleReport& report) {
  return {{"check", report.name},
          {"max_error", report.max_error},
          {"tolerance", report.tolerance},
          {"pass", report.pass}};
}

}  // namespace randumb::checks
