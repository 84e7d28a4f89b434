#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "pactran/errors.hpp"
#include "pactran/harness.hpp"
#include "pactran/manifest.hpp"

using namespace pactran;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// One shared benchmark: four checkpoints whose features degrade with noise.
// Generated once; later cases reuse the directory read-only.
const fs::path& benchmark_dir() {
  static const fs::path dir = fs::temp_directory_path() / "pactran_harness_bench";
  return dir;
}

SyntheticSpec benchmark_spec() {
  SyntheticSpec spec;
  spec.num_checkpoints = 4;
  spec.num_train = 60;
  spec.num_test = 400;
  spec.feature_dim = 8;
  spec.num_classes = 3;
  spec.noise_levels = {0.05, 0.35, 0.6, 0.85};
  spec.seed = 11;
  return spec;
}

MetricConfig small_config() {
  MetricConfig config;
  config.seed = 3;
  config.workers = 1;
  config.subsample.num_splits = 2;
  config.subsample.seed = 3;
  return config;
}

}  // namespace

TEST_CASE("robust_std matches hand-computed scales") {
  const std::vector<double> odd = {1.0, 2.0, 3.0, 4.0, 100.0};
  CHECK(robust_std(odd) == doctest::Approx(1.4826).epsilon(1e-12));

  // Even length: both the center and the deviation median average two entries.
  const std::vector<double> even = {1.0, 2.0, 3.0, 4.0};
  CHECK(robust_std(even) == doctest::Approx(1.4826).epsilon(1e-12));

  const std::vector<double> flat = {7.0, 7.0, 7.0};
  CHECK(robust_std(flat) == 0.0);

  CHECK(std::isnan(robust_std({})));
}

TEST_CASE("resolve_worker_count prefers config, then the environment") {
  const char* saved = std::getenv("PACTRAN_WORKERS");
  const std::string saved_value = saved ? saved : "";

  unsetenv("PACTRAN_WORKERS");
  CHECK(resolve_worker_count(3) == 3);
  CHECK(resolve_worker_count(0) >= 1);

  setenv("PACTRAN_WORKERS", "2", 1);
  CHECK(resolve_worker_count(0) == 2);
  CHECK(resolve_worker_count(5) == 5);  // explicit config still wins

  setenv("PACTRAN_WORKERS", "garbage", 1);
  CHECK(resolve_worker_count(0) >= 1);

  if (saved) {
    setenv("PACTRAN_WORKERS", saved_value.c_str(), 1);
  } else {
    unsetenv("PACTRAN_WORKERS");
  }
}

TEST_CASE("metric config survives a json round trip") {
  MetricConfig config;
  config.metrics = {"leep", "pt-gauss"};
  config.pt_gauss_grid = true;
  config.beta_factors = {0.5, 2.0};
  config.sigma0_numerators = {3.0, 4.0};
  config.fixed_beta_factor = 7.0;
  config.fixed_sigma0_numerator = 11.0;
  config.nleep_energy_fraction = 0.9;
  config.nleep_components = 2;
  config.seed = 99;

  const nlohmann::ordered_json doc = metric_config_to_json(config);
  const MetricConfig back = metric_config_from_json(doc);
  CHECK(back.metrics == config.metrics);
  CHECK(back.pt_gauss_grid == config.pt_gauss_grid);
  CHECK(back.beta_factors == config.beta_factors);
  CHECK(back.sigma0_numerators == config.sigma0_numerators);
  CHECK(back.fixed_beta_factor == config.fixed_beta_factor);
  CHECK(back.fixed_sigma0_numerator == config.fixed_sigma0_numerator);
  CHECK(back.nleep_energy_fraction == config.nleep_energy_fraction);
  CHECK(back.nleep_components == config.nleep_components);
  CHECK(back.seed == config.seed);
  CHECK(back.subsample.seed == config.seed);  // seed cascades without a subsample block

  // An empty selection serializes as the full metric list.
  MetricConfig everything;
  const nlohmann::ordered_json all_doc = metric_config_to_json(everything);
  CHECK(all_doc["metrics"].get<std::vector<std::string>>() == all_metric_names());

  CHECK_THROWS_AS(metric_config_from_json(nlohmann::json{{"pt_gauss_mode", "both"}}),
                  ValidationError);
}

TEST_CASE("synthetic benchmark degrades with noise and regenerates identically") {
  const fs::path dir = benchmark_dir();
  fs::remove_all(dir);
  const SyntheticSummary summary = generate_synthetic_benchmark(benchmark_spec(), dir);

  REQUIRE(summary.test_errors.size() == 4);
  for (double err : summary.test_errors) {
    CHECK(err >= 0.0);
    CHECK(err <= 1.0);
  }
  CHECK(std::is_sorted(summary.test_errors.begin(), summary.test_errors.end()));
  CHECK(summary.test_errors.front() <= 0.05);
  CHECK(summary.test_errors.back() >= 0.4);

  const CheckpointManifest manifest = load_manifest(summary.manifest_path);
  REQUIRE(manifest.entries.size() == 4);
  for (const auto& entry : manifest.entries) {
    CHECK(entry.source_probs_path.has_value());
    REQUIRE(entry.test_error.has_value());
  }

  // Same spec, fresh directory: every file byte-identical (manifest paths
  // are stored relative, so even it matches).
  const fs::path twin = fs::temp_directory_path() / "pactran_harness_bench_twin";
  fs::remove_all(twin);
  generate_synthetic_benchmark(benchmark_spec(), twin);
  std::vector<std::string> names;
  for (const auto& item : fs::directory_iterator(dir)) {
    names.push_back(item.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 10);  // manifest + labels + 4 features + 4 probs
  for (const auto& name : names) {
    CAPTURE(name);
    CHECK(read_bytes(dir / name) == read_bytes(twin / name));
  }
  fs::remove_all(twin);
}

TEST_CASE("run_metrics reports every cell and is parallel-deterministic") {
  const CheckpointManifest manifest = load_manifest(benchmark_dir() / "manifest.json");
  MetricConfig config = small_config();

  const nlohmann::ordered_json report = run_metrics(manifest, config);
  CHECK(report["schema"] == "ranking-report/1");
  CHECK(report["num_classes"] == 3);
  REQUIRE(report["checkpoints"].size() == 4);
  REQUIRE(report["splits"].size() == 2);

  for (const auto& split : report["splits"]) {
    // 5 per class * 3 classes = 15, topped up to the 20-example floor.
    CHECK(split["num_examples"] == 20);
    const auto indices = split["indices"].get<std::vector<int>>();
    CHECK(static_cast<int>(indices.size()) == split["num_examples"].get<int>());
    CHECK(std::is_sorted(indices.begin(), indices.end()));
    CHECK(std::adjacent_find(indices.begin(), indices.end()) == indices.end());
    for (const auto& name : all_metric_names()) {
      REQUIRE(split["metrics"].contains(name));
      const auto& scores = split["metrics"][name]["scores"];
      for (const auto& id : report["checkpoints"]) {
        REQUIRE(scores.contains(id.get<std::string>()));
        CHECK(std::isfinite(scores[id.get<std::string>()].get<double>()));
      }
    }
  }

  config.workers = 4;
  const nlohmann::ordered_json parallel = run_metrics(manifest, config);
  CHECK(report.dump() == parallel.dump());
}

TEST_CASE("run_metrics isolates a checkpoint that fails to load") {
  const fs::path dir = fs::temp_directory_path() / "pactran_harness_broken";
  fs::remove_all(dir);
  generate_synthetic_benchmark(benchmark_spec(), dir);
  {
    std::ofstream out(dir / "features_ckpt02.ptrn", std::ios::trunc | std::ios::binary);
    out << "not a tensor";
  }
  const CheckpointManifest manifest = load_manifest(dir / "manifest.json");

  MetricConfig config = small_config();
  config.metrics = {"leep", "logme"};
  const nlohmann::ordered_json report = run_metrics(manifest, config);

  for (const auto& split : report["splits"]) {
    for (const auto& name : config.metrics) {
      const auto& entry = split["metrics"][name];
      CHECK(entry["scores"]["ckpt02"].is_null());
      REQUIRE(entry.contains("flags"));
      const std::string flag = entry["flags"]["ckpt02"].get<std::string>();
      CHECK(flag.find("checkpoint load failed") != std::string::npos);
      // The failure stays confined to its checkpoint.
      CHECK(std::isfinite(entry["scores"]["ckpt00"].get<double>()));
      CHECK(std::isfinite(entry["scores"]["ckpt03"].get<double>()));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("evaluate_ranking summarizes taus per split and validates its inputs") {
  const CheckpointManifest manifest = load_manifest(benchmark_dir() / "manifest.json");
  MetricConfig config = small_config();
  config.metrics = {"leep", "hscore", "pt-dir"};
  const nlohmann::ordered_json report = run_metrics(manifest, config);

  const nlohmann::ordered_json evaluation = evaluate_ranking(report, manifest);
  CHECK(evaluation["schema"] == "ranking-evaluation/1");
  CHECK(evaluation["num_checkpoints"] == 4);
  for (const auto& name : config.metrics) {
    REQUIRE(evaluation["metrics"].contains(name));
    const auto& entry = evaluation["metrics"][name];
    REQUIRE(entry["per_split_tau"].size() == 2);
    for (const auto& tau : entry["per_split_tau"]) {
      const double t = tau.get<double>();
      CHECK(t >= -1.0);
      CHECK(t <= 1.0);
    }
    CHECK(std::isfinite(entry["mean_tau"].get<double>()));
  }
  // Clean separation by noise level: the strongest checkpoint ranks first.
  CHECK(evaluation["metrics"]["leep"]["mean_tau"].get<double>() > 0.0);

  const std::string table = format_evaluation_table(evaluation);
  CHECK(table.find("metric") != std::string::npos);
  CHECK(table.find("mean_tau") != std::string::npos);
  CHECK(table.find("hscore") != std::string::npos);

  CheckpointManifest no_error = manifest;
  no_error.entries[1].test_error.reset();
  CHECK_THROWS_AS(evaluate_ranking(report, no_error), ValidationError);

  CheckpointManifest missing = manifest;
  missing.entries.pop_back();
  CHECK_THROWS_AS(evaluate_ranking(report, missing), ValidationError);

  CHECK_THROWS_AS(evaluate_ranking(nlohmann::ordered_json::object(), manifest),
                  ValidationError);
}

TEST_CASE("grid mode selects hyperparameters and fills the dispersion table") {
  const CheckpointManifest manifest = load_manifest(benchmark_dir() / "manifest.json");
  MetricConfig config = small_config();
  config.metrics = {"pt-gauss"};
  config.pt_gauss_grid = true;
  config.beta_factors = {1.0, 10.0};
  config.sigma0_numerators = {10.0, 100.0};
  const nlohmann::ordered_json report = run_metrics(manifest, config);

  CHECK(report["config"]["pt_gauss_mode"] == "grid");
  const auto& hparams = report["hparams"]["pt-gauss"];
  CHECK(hparams["mode"] == "grid");
  REQUIRE(hparams["per_split"].size() == 2);
  for (const auto& pick : hparams["per_split"]) {
    CHECK((pick["beta_factor"] == 1.0 || pick["beta_factor"] == 10.0));
    CHECK((pick["sigma0_numerator"] == 10.0 || pick["sigma0_numerator"] == 100.0));
  }
  CHECK(hparams["shared"].contains("beta_factor"));
  CHECK(hparams["shared"].contains("sigma0_numerator"));

  const std::string csv = std_ratio_csv(report);
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line ==
        "split_index,beta_factor,sigma0_numerator,rer_robust_std,fr_robust_std,std_ratio");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2 * 4);  // every (split, grid pair) has enough finite cells
}
