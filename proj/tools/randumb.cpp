// randumb: run, sweep, ablate and verify from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "randumb/bench_harness.hpp"
#include "randumb/checks.hpp"
#include "randumb/errors.hpp"

namespace {

using randumb::ErrorKind;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape:
    case ErrorKind::kData:
    case ErrorKind::kFormat:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kEmptyModel:
      return kExitData;
    case ErrorKind::kNumerical:
    case ErrorKind::kSingularUpdate:
      return kExitNumerical;
    default:
      return kExitConfig;
  }
}

// Flag values; each is applied only if given, after the config file.
struct Flags {
  std::string config_path;
  std::string dataset, data_dir, variant, estimator_mode, normalizer, input_norm;
  std::size_t embed_dim = 0, classes_per_task = 0, update_block = 0, eval_every_k = 0;
  std::size_t threads = 0, max_train = 0, max_test = 0;
  double gamma = 0, lambda = 0, memory_cap_gb = 0;
  std::uint64_t seed = 0, stream_seed = 0;
  bool augment = false, online_inverse = false;
  std::string out, csv;
};

void add_run_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config_path, "JSON config; flags override its keys")
      ->check(CLI::ExistingFile);
  cmd.add_option("--dataset", f.dataset, "mnist, cifar10, cifar100, tinyimagenet, "
                                         "miniimagenet or features/<dir>");
  cmd.add_option("--data-dir", f.data_dir, "dataset root (default $RANDUMB_DATA_DIR)");
  cmd.add_option("--variant", f.variant, "randumb, kernel_ncm, slda, ncm or rp_relu");
  cmd.add_option("--embed-dim", f.embed_dim, "embedding size E (even for RFF)");
  cmd.add_option("--gamma", f.gamma, "RBF kernel width");
  cmd.add_option("--lambda", f.lambda, "ridge added after shrinkage");
  cmd.add_option("--seed", f.seed, "embedding seed");
  cmd.add_option("--stream-seed", f.stream_seed, "stream order seed (default --seed)");
  cmd.add_flag("--augment,!--no-augment", f.augment, "add horizontally flipped copies");
  cmd.add_option("--classes-per-task", f.classes_per_task);
  cmd.add_option("--estimator-mode", f.estimator_mode, "pooled or global");
  cmd.add_option("--normalizer", f.normalizer, "n-1 or n-C");
  cmd.add_option("--input-norm", f.input_norm, "l2 or none");
  cmd.add_option("--update-block", f.update_block,
                 "scatter terms per rank-k update (1 = strict rank-1)");
  cmd.add_option("--eval-every-k", f.eval_every_k, "record accuracy every k samples");
  cmd.add_flag("--online-inverse", f.online_inverse, "Sherman-Morrison tracked inverse");
  cmd.add_option("--memory-cap-gb", f.memory_cap_gb, "refuse runs above this estimate");
  cmd.add_option("--threads", f.threads, "test-time prediction threads");
  cmd.add_option("--max-train", f.max_train, "use only the first N training items");
  cmd.add_option("--max-test", f.max_test, "use only the first N test items");
  cmd.add_option("--out", f.out, "append results as JSON lines");
}

randumb::RunConfig build_config(const CLI::App& cmd, const Flags& f) {
  randumb::RunConfig c;
  if (const char* env = std::getenv("RANDUMB_DATA_DIR")) c.data_dir = env;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      randumb::fail(ErrorKind::kConfig, f.config_path + ": " + e.what());
    }
    randumb::merge_from_json(j, c);
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--dataset")) c.dataset = f.dataset;
  if (given("--data-dir")) c.data_dir = f.data_dir;
  if (given("--variant")) c.variant = randumb::parse_variant(f.variant);
  if (given("--embed-dim")) c.embed_dim = f.embed_dim;
  if (given("--gamma")) c.gamma = f.gamma;
  if (given("--lambda")) c.lambda = f.lambda;
  if (given("--seed")) c.seed = f.seed;
  if (given("--stream-seed")) c.stream_seed = f.stream_seed;
  if (given("--augment") || given("--no-augment")) c.augment = f.augment;
  if (given("--classes-per-task")) c.classes_per_task = f.classes_per_task;
  if (given("--estimator-mode")) c.estimator_mode = randumb::parse_estimator_mode(f.estimator_mode);
  if (given("--normalizer")) c.normalizer = randumb::parse_normalizer(f.normalizer);
  if (given("--input-norm")) c.input_norm = randumb::parse_input_norm(f.input_norm);
  if (given("--update-block")) c.update_block = f.update_block;
  if (given("--eval-every-k")) c.eval_every_k = f.eval_every_k;
  if (given("--online-inverse")) c.online_inverse = f.online_inverse;
  if (given("--memory-cap-gb")) {
    c.memory_cap_bytes = static_cast<std::uint64_t>(f.memory_cap_gb * (1ull << 30));
  }
  if (given("--threads")) c.threads = f.threads;
  if (given("--max-train")) c.max_train = f.max_train;
  if (given("--max-test")) c.max_test = f.max_test;
  if (c.data_dir.empty()) c.data_dir = ".";
  return c;
}

void report(const randumb::RunResult& r, const Flags& f) {
  const auto j = randumb::to_json(r);
  std::cout << j.dump() << std::endl;
  if (!f.out.empty()) randumb::append_jsonl(f.out, r);
}

std::vector<randumb::Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<randumb::Variant> out;
  for (const auto& n : names) out.push_back(randumb::parse_variant(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming random-feature classifier benchmarks"};
  app.require_subcommand(1);

  Flags run_flags, sweep_flags, ablate_flags;
  auto* run = app.add_subcommand("run", "one benchmark run");
  add_run_flags(*run, run_flags);

  auto* sweep = app.add_subcommand("sweep", "accuracy versus embedding size");
  add_run_flags(*sweep, sweep_flags);
  std::vector<std::size_t> dims = {1000, 15000, 25000};
  sweep->add_option("--dims", dims, "embedding sizes, ascending")->delimiter(',');
  sweep->add_option("--csv", sweep_flags.csv, "write a results table");

  auto* ablate = app.add_subcommand("ablate", "compare classifier variants on one stream");
  add_run_flags(*ablate, ablate_flags);
  std::vector<std::string> variant_names;
  ablate->add_option("--variants", variant_names, "subset of variants (default all)")
      ->delimiter(',');
  ablate->add_option("--csv", ablate_flags.csv, "write a results table");

  auto* verify = app.add_subcommand("verify", "run the oracle property checks");
  std::uint64_t verify_seed = 2024;
  verify->add_option("--seed", verify_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const auto config = build_config(*run, run_flags);
      const auto dataset = randumb::load_dataset(config.dataset, config.data_dir);
      report(randumb::run_benchmark(config, dataset), run_flags);
    } else if (*sweep) {
      const auto config = build_config(*sweep, sweep_flags);
      const auto dataset = randumb::load_dataset(config.dataset, config.data_dir);
      const auto results = randumb::sweep_embedding(
          dims, config, dataset, [&](const randumb::RunResult& r) { report(r, sweep_flags); });
      if (!sweep_flags.csv.empty()) randumb::write_csv(sweep_flags.csv, results);
    } else if (*ablate) {
      const auto config = build_config(*ablate, ablate_flags);
      const auto dataset = randumb::load_dataset(config.dataset, config.data_dir);
      const auto results =
          randumb::run_ablation(config, dataset, parse_variants(variant_names),
                                [&](const randumb::RunResult& r) { report(r, ablate_flags); });
      if (!ablate_flags.csv.empty()) randumb::write_csv(ablate_flags.csv, results);
    } else if (*verify) {
      bool all_pass = true;
      for (const auto& r : randumb::checks::run_all(verify_seed)) {
        std::cout << randumb::checks::to_json(r).dump() << '\n';
        all_pass = all_pass && r.pass;
      }
      return all_pass ? 0 : 1;
    }
  } catch (const randumb::Error& e) {
    std::cerr << "error (" << randumb::to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory; lower --embed-dim\n";
    return kExitConfig;
  }
  return 0;
}
