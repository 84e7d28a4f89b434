#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pactran/manifest.hpp"
#include "pactran/subsample.hpp"

namespace pactran {

/// Canonical metric names accepted by the harness and the CLI.
const std::vector<std::string>& all_metric_names();

struct MetricConfig {
  std::vector<std::string> metrics;  // empty selects every metric
  bool pt_gauss_grid = false;        // false: fixed pair below
  // Grids follow the subsampling protocol: beta = factor * N and
  // sigma0^2 = numerator / D_eff with D_eff = D + 1.
  std::vector<double> beta_factors{0.1, 1.0, 10.0};
  std::vector<double> sigma0_numerators{1.0, 10.0, 100.0, 1000.0};
  double fixed_beta_factor = 10.0;
  double fixed_sigma0_numerator = 100.0;
  double nleep_energy_fraction = 0.8;
  int nleep_components = 0;  // 0 uses the downstream class count
  std::uint64_t seed = 0;
  int workers = 0;  // 0: PACTRAN_WORKERS env var, else hardware concurrency
  SubsampleSpec subsample;
};

MetricConfig metric_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json metric_config_to_json(const MetricConfig& config);

/// Runs every enabled metric on every (checkpoint, split) cell, subsampling
/// once per split so all checkpoints see identical examples. Cells may run
/// in parallel; per-checkpoint failures are flagged in the report and do not
/// stop the run. Scores in the report are oriented so that HIGHER means more
/// transferable. Deterministic: identical (manifest, config) inputs yield a
/// byte-identical report.
nlohmann::ordered_json run_metrics(const CheckpointManifest& manifest,
                                   const MetricConfig& config);

/// Kendall-Tau of each metric against -test_error per split, with mean and
/// standard error over splits. Every checkpoint must carry a test error.
nlohmann::ordered_json evaluate_ranking(const nlohmann::ordered_json& report,
                                        const CheckpointManifest& manifest);

/// Fixed-width text rendering of an evaluation document.
std::string format_evaluation_table(const nlohmann::ordered_json& evaluation);

/// The per-(split, hyperparameter pair) flatness/risk dispersion table as CSV.
std::string std_ratio_csv(const nlohmann::ordered_json& report);

/// 1.4826 * median absolute deviation (normal-consistent robust scale).
double robust_std(std::span<const double> values);

/// Worker count resolution: explicit config, then the PACTRAN_WORKERS
/// environment variable, then hardware concurrency.
int resolve_worker_count(int configured);

struct SyntheticSpec {
  int num_checkpoints = 12;
  int num_train = 400;
  int num_test = 2000;
  int feature_dim = 64;
  int num_classes = 10;
  int num_source_classes = 0;  // 0 matches num_classes
  // Strictly increasing in [0, 1); empty selects an even spread.
  std::vector<double> noise_levels;
  std::uint64_t seed = 0;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc);

struct SyntheticSummary {
  std::filesystem::path manifest_path;
  std::vector<double> noise_levels;
  std::vector<double> test_errors;  // ground-truth probe errors per checkpoint
};

/// Writes a synthetic benchmark under out_dir: checkpoints whose features are
/// class means on the unit sphere progressively replaced by noise, source
/// probabilities from a softmax over the leading coordinates, and ground-truth
/// transfer errors from an L2 probe (beta = 10 N_train) on fresh test samples.
/// Regeneration with the same spec reproduces identical files.
SyntheticSummary generate_synthetic_benchmark(const SyntheticSpec& spec,
                                              const std::filesystem::path& out_dir);

}  // namespace pactran
