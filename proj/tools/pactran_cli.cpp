#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "pactran/classifier.hpp"
#include "pactran/errors.hpp"
#include "pactran/evidence_oracles.hpp"
#include "pactran/harness.hpp"
#include "pactran/leep.hpp"
#include "pactran/manifest.hpp"
#include "pactran/pactran_metrics.hpp"
#include "pactran/regression_metrics.hpp"
#include "pactran/rng.hpp"
#include "pactran/special.hpp"
#include "pactran/tensor_io.hpp"

namespace {

using nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pactran::ValidationError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw pactran::ValidationError("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pactran::ValidationError("cannot open: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw pactran::FormatError("invalid JSON: " + path.string(), 0);
  return doc;
}

struct ComputeOptions {
  std::string metric;
  std::string features_path;
  std::string labels_path;
  std::string source_probs_path;
  std::vector<double> beta;   // absolute values; empty: per-metric default from N
  double sigma0 = -1.0;       // absolute sigma0^2; <0: 100 / (D + 1)
  int num_classes = 0;        // 0: max label + 1
  std::uint64_t seed = 0;
};

int run_compute(const ComputeOptions& opts) {
  const auto names = pactran::all_metric_names();
  if (std::find(names.begin(), names.end(), opts.metric) == names.end()) {
    throw pactran::ValidationError("unknown metric: " + opts.metric);
  }
  const Eigen::VectorXi labels = pactran::load_int_vector(opts.labels_path);
  if (labels.size() == 0) throw pactran::ValidationError("empty labels: " + opts.labels_path);
  const int num_classes = opts.num_classes > 0 ? opts.num_classes : labels.maxCoeff() + 1;
  const double n = static_cast<double>(labels.size());

  const bool uses_beta =
      opts.metric == "linear" || opts.metric == "linear-valid" || opts.metric == "pt-gauss";
  if (!opts.beta.empty() && !uses_beta) {
    throw pactran::ValidationError("--beta does not apply to " + opts.metric);
  }
  if (opts.beta.size() > 1 && opts.metric != "linear-valid") {
    throw pactran::ValidationError(opts.metric + " takes a single --beta value");
  }
  if (opts.sigma0 >= 0 && opts.metric != "pt-gauss") {
    throw pactran::ValidationError("--sigma0 only applies to pt-gauss");
  }
  const double beta = opts.beta.empty() ? 10.0 * n : opts.beta.front();

  const bool uses_source = opts.metric == "leep" || opts.metric == "nce" ||
                           opts.metric == "pt-dir" || opts.metric == "pt-gam";
  ordered_json out;
  out["metric"] = opts.metric;
  out["num_examples"] = labels.size();
  out["num_classes"] = num_classes;
  double score = std::numeric_limits<double>::quiet_NaN();
  ordered_json diag = ordered_json::object();

  if (uses_source) {
    if (opts.source_probs_path.empty()) {
      throw pactran::ValidationError("--source-probs is required for " + opts.metric);
    }
    pactran::SourceDistribution source;
    source.probs = pactran::load_matrix(opts.source_probs_path);
    if (opts.metric == "leep") {
      const auto result = pactran::leep_score(source, labels, num_classes);
      score = result.score;
      diag["degenerate"] = result.degenerate;
      diag["empty_source_columns"] = result.empty_columns;
    } else if (opts.metric == "nce") {
      score = pactran::nce_score(source, labels, num_classes);
    } else if (opts.metric == "pt-dir") {
      const auto result = pactran::pactran_dirichlet(source, labels, num_classes);
      score = result.score;
      diag["sweeps"] = result.state.sweeps;
      diag["converged"] = result.state.converged;
      diag["clamped"] = result.state.clamped;
    } else {
      const auto result = pactran::pactran_gamma(source, labels, num_classes);
      score = result.score;
      diag["sweeps"] = result.state.sweeps;
      diag["converged"] = result.state.converged;
      diag["clamped"] = result.state.clamped;
    }
  } else {
    if (opts.features_path.empty()) {
      throw pactran::ValidationError("--features is required for " + opts.metric);
    }
    pactran::FeatureSet data;
    data.features = pactran::load_matrix(opts.features_path);
    data.labels = labels;
    data.num_classes = num_classes;
    const double d_eff = static_cast<double>(data.features.cols() + 1);
    if (opts.metric == "nleep") {
      const auto result = pactran::nleep_score(data, 0.8, -1, opts.seed);
      score = result.score;
      diag["reduced_dim"] = result.reduced_dim;
      diag["gmm_log_likelihood"] = result.gmm_log_likelihood;
      diag["pca_degenerate"] = result.pca_degenerate;
    } else if (opts.metric == "hscore") {
      score = pactran::h_score(data);
    } else if (opts.metric == "logme") {
      const auto result = pactran::logme_score(data);
      score = result.score;
      bool converged = true;
      ordered_json evidence = ordered_json::array();
      for (const auto& cls : result.per_class) {
        converged = converged && cls.converged;
        evidence.push_back(cls.evidence);
      }
      diag["converged"] = converged;
      diag["per_class_evidence"] = std::move(evidence);
      diag["skipped_classes"] = result.skipped_classes;
    } else if (opts.metric == "linear") {
      const auto result = pactran::linear_metric(data, beta);
      score = result.loss;
      diag["beta"] = beta;
      diag["converged"] = result.converged;
    } else if (opts.metric == "linear-valid") {
      std::vector<double> grid = opts.beta;
      if (grid.empty()) grid = {0.1 * n, 1.0 * n, 10.0 * n};
      const auto result = pactran::linear_valid_metric(data, grid, opts.seed);
      score = result.validation_error;
      diag["chosen_beta"] = result.chosen_beta;
      diag["beta_grid"] = grid;
      diag["errors_per_beta"] = result.errors_per_beta;
      diag["fits_performed"] = result.fits_performed;
      diag["fold_missing_class"] = result.fold_missing_class;
    } else {
      const double sigma0_sq = opts.sigma0 >= 0 ? opts.sigma0 : 100.0 / d_eff;
      const auto result = pactran::pactran_gaussian(data, beta, sigma0_sq);
      score = result.score;
      diag["empirical_risk"] = result.empirical_risk;
      diag["flatness"] = result.flatness;
      diag["variance_ratio"] = result.variance_ratio;
      diag["trace_hessian"] = result.trace_hessian;
      diag["beta"] = result.beta;
      diag["sigma0_sq"] = result.sigma0_sq;
      diag["lambda"] = result.lambda;
      diag["converged"] = result.converged;
    }
  }
  if (!std::isfinite(score)) throw pactran::NumericalError(opts.metric + " score is not finite");
  out["score"] = score;
  out["diagnostics"] = std::move(diag);
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

struct RankOptions {
  std::string manifest_path;
  std::string out_path;
  std::string config_path;
  std::vector<std::string> metrics;
  std::string pt_gauss_mode;
  int samples_per_class = -1;
  int min_total = -1;
  int num_splits = -1;
  std::int64_t seed = -1;
  int workers = 0;
};

void add_rank_options(CLI::App* cmd, RankOptions& opts) {
  cmd->add_option("--manifest", opts.manifest_path, "Checkpoint manifest JSON")->required();
  cmd->add_option("--out", opts.out_path, "Report JSON output path")->required();
  cmd->add_option("--config", opts.config_path, "Metric config JSON (flags override it)");
  cmd->add_option("--metrics", opts.metrics, "Metric names (default: all)")->delimiter(',');
  cmd->add_option("--pt-gauss-mode", opts.pt_gauss_mode, "fix or grid")
      ->check(CLI::IsMember({"fix", "grid"}));
  cmd->add_option("--samples-per-class", opts.samples_per_class, "Examples drawn per class");
  cmd->add_option("--min-total", opts.min_total, "Minimum examples per split");
  cmd->add_option("--splits", opts.num_splits, "Number of subsample splits");
  cmd->add_option("--seed", opts.seed, "Base seed");
  cmd->add_option("--workers", opts.workers, "Worker threads (0: PACTRAN_WORKERS or hardware)");
}

pactran::MetricConfig build_config(const RankOptions& opts) {
  pactran::MetricConfig config;
  if (!opts.config_path.empty()) {
    config = pactran::metric_config_from_json(read_json(opts.config_path));
  }
  if (!opts.metrics.empty()) config.metrics = opts.metrics;
  if (!opts.pt_gauss_mode.empty()) config.pt_gauss_grid = opts.pt_gauss_mode == "grid";
  if (opts.samples_per_class >= 0) config.subsample.samples_per_class = opts.samples_per_class;
  if (opts.min_total >= 0) config.subsample.min_total = opts.min_total;
  if (opts.num_splits >= 0) config.subsample.num_splits = opts.num_splits;
  if (opts.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(opts.seed);
    config.subsample.seed = config.seed;
  }
  if (opts.workers > 0) config.workers = opts.workers;
  return config;
}

int run_rank(const RankOptions& opts, const std::string& evaluation_path) {
  const pactran::CheckpointManifest manifest = pactran::load_manifest(opts.manifest_path);
  const pactran::MetricConfig config = build_config(opts);
  const ordered_json report = pactran::run_metrics(manifest, config);
  write_json(opts.out_path, report);
  std::printf("report: %s\n", opts.out_path.c_str());
  std::filesystem::path diag_path(opts.out_path);
  diag_path.replace_extension(".diagnostics.csv");
  write_text(diag_path, pactran::std_ratio_csv(report));
  const bool has_errors =
      std::all_of(manifest.entries.begin(), manifest.entries.end(),
                  [](const pactran::CheckpointEntry& e) { return e.test_error.has_value(); });
  if (has_errors) {
    const ordered_json evaluation = pactran::evaluate_ranking(report, manifest);
    if (!evaluation_path.empty()) write_json(evaluation_path, evaluation);
    std::fputs(pactran::format_evaluation_table(evaluation).c_str(), stdout);
  } else {
    std::puts("manifest has no test errors; skipping evaluation");
  }
  return 0;
}

pactran::SourceDistribution random_source(std::mt19937_64& rng, int n, int z_count) {
  std::uniform_real_distribution<double> uniform(0.05, 1.0);
  pactran::SourceDistribution source;
  source.probs.resize(n, z_count);
  for (int i = 0; i < n; ++i) {
    for (int z = 0; z < z_count; ++z) source.probs(i, z) = uniform(rng);
    source.probs.row(i) /= source.probs.row(i).sum();
  }
  return source;
}

Eigen::VectorXi random_labels(std::mt19937_64& rng, int n, int num_classes) {
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(pactran::uniform_index(rng, num_classes));
  }
  return labels;
}

struct OracleOptions {
  std::string kind;
  int trials = 20;
  std::uint64_t seed = 0;
  int mc_samples = 20000;
  double tolerance = -1.0;  // <0: per-kind default
};

int run_oracle(const OracleOptions& opts) {
  double worst = -std::numeric_limits<double>::infinity();
  int worst_trial = -1;
  double tolerance = opts.tolerance;
  for (int t = 0; t < opts.trials; ++t) {
    std::mt19937_64 rng(pactran::mix_seed(opts.seed, static_cast<std::uint64_t>(t)));
    double violation = 0.0;
    if (opts.kind == "dirichlet-exact") {
      if (tolerance < 0) tolerance = 1e-8;
      const int z_count = 1 + static_cast<int>(pactran::uniform_index(rng, 3));
      const int n = 2 + static_cast<int>(pactran::uniform_index(rng, 5));
      const int k = 2 + static_cast<int>(pactran::uniform_index(rng, 2));
      const auto source = random_source(rng, n, z_count);
      const auto labels = random_labels(rng, n, k);
      const double score = pactran::pactran_dirichlet(source, labels, k).score;
      const double log_z = pactran::exact_log_evidence_dirichlet(source, labels, k);
      violation = -log_z - score;
    } else if (opts.kind == "gamma-mc") {
      if (tolerance < 0) tolerance = 0.0;
      const int z_count = 1 + static_cast<int>(pactran::uniform_index(rng, 3));
      const int n = 2 + static_cast<int>(pactran::uniform_index(rng, 5));
      const int k = 2 + static_cast<int>(pactran::uniform_index(rng, 2));
      const auto source = random_source(rng, n, z_count);
      const auto labels = random_labels(rng, n, k);
      const double score = pactran::pactran_gamma(source, labels, k).score;
      const auto mc = pactran::mc_log_evidence_gamma(source, labels, k, {}, opts.mc_samples,
                                                     pactran::mix_seed(opts.seed, t, 17));
      violation = -(mc.estimate + 3.0 * mc.standard_error) - score;
    } else if (opts.kind == "gradient-fd" || opts.kind == "hessian-fd") {
      if (tolerance < 0) tolerance = opts.kind == "gradient-fd" ? 1e-5 : 1e-4;
      std::normal_distribution<double> normal(0.0, 1.0);
      const int n = 10 + static_cast<int>(pactran::uniform_index(rng, 20));
      const int d = 2 + static_cast<int>(pactran::uniform_index(rng, 3));
      const int k = 2 + static_cast<int>(pactran::uniform_index(rng, 2));
      Eigen::MatrixXd features(n, d);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) features(i, j) = normal(rng);
      }
      const Eigen::VectorXi labels = random_labels(rng, n, k);
      Eigen::MatrixXd theta(d + 1, k);
      for (int i = 0; i <= d; ++i) {
        for (int j = 0; j < k; ++j) theta(i, j) = 0.3 * normal(rng);
      }
      const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
      if (opts.kind == "gradient-fd") {
        const double beta = 5.0 * n;
        std::function<double(const Eigen::VectorXd&)> objective =
            [&](const Eigen::VectorXd& x) {
              const Eigen::MatrixXd mapped =
                  Eigen::Map<const Eigen::MatrixXd>(x.data(), d + 1, k);
              return pactran::l2_softmax_objective(features, labels, k, mapped, beta);
            };
        const Eigen::MatrixXd grad =
            pactran::l2_softmax_gradient(features, labels, k, theta, beta);
        const Eigen::VectorXd grad_flat =
            Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
        const Eigen::VectorXd grad_fd = pactran::fd_gradient(objective, flat);
        violation = (grad_flat - grad_fd).norm() / std::max(grad_flat.norm(), 1e-8);
      } else {
        std::function<double(const Eigen::VectorXd&)> objective =
            [&](const Eigen::VectorXd& x) {
              const Eigen::MatrixXd mapped =
                  Eigen::Map<const Eigen::MatrixXd>(x.data(), d + 1, k);
              return pactran::softmax_cross_entropy(features, labels, k, mapped);
            };
        const double trace = pactran::trace_hessian_ce(features, labels, theta);
        const double trace_fd = pactran::fd_hessian_trace(objective, flat);
        violation = std::abs(trace - trace_fd) / std::max(std::abs(trace), 1e-8);
      }
    } else {
      throw pactran::ValidationError("unknown oracle kind: " + opts.kind);
    }
    if (violation > worst) {
      worst = violation;
      worst_trial = t;
    }
  }
  const bool pass = worst <= tolerance;
  std::printf("%s: trials=%d worst=%.3e (trial %d) tolerance=%.3e -> %s\n", opts.kind.c_str(),
              opts.trials, worst, worst_trial, tolerance, pass ? "PASS" : "FAIL");
  if (!pass) throw pactran::NumericalError("oracle bound violated");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transferability metrics for pretrained checkpoints"};
  app.require_subcommand(1);

  ComputeOptions compute_opts;
  CLI::App* compute =
      app.add_subcommand("compute", "Score one metric on explicit tensor files");
  compute->add_option("--metric", compute_opts.metric, "Metric name")->required();
  compute->add_option("--features", compute_opts.features_path, "Feature matrix (.ptrn)");
  compute->add_option("--labels", compute_opts.labels_path, "Label vector (.ptrn)")->required();
  compute->add_option("--source-probs", compute_opts.source_probs_path,
                      "Source-head probability matrix (.ptrn)");
  compute->add_option("--beta", compute_opts.beta,
                      "Regularizer beta (default 10*N; comma list is the linear-valid grid)")
      ->delimiter(',');
  compute->add_option("--sigma0", compute_opts.sigma0,
                      "Prior variance sigma0^2 for pt-gauss (default 100/(D+1))");
  compute->add_option("--classes", compute_opts.num_classes,
                      "Number of classes (default: max label + 1)");
  compute->add_option("--seed", compute_opts.seed, "Seed for nleep and linear-valid");

  RankOptions rank_opts;
  std::string evaluation_path;
  CLI::App* rank =
      app.add_subcommand("rank", "Score a checkpoint manifest and write the ranking report");
  add_rank_options(rank, rank_opts);
  rank->add_option("--evaluation", evaluation_path, "Evaluation JSON output path");

  std::string eval_report_path, eval_manifest_path, eval_out_path;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate an existing report");
  evaluate->add_option("--report", eval_report_path, "Report JSON")->required();
  evaluate->add_option("--manifest", eval_manifest_path, "Manifest with test errors")->required();
  evaluate->add_option("--out", eval_out_path, "Evaluation JSON output path");

  std::string synth_out, synth_spec_path;
  pactran::SyntheticSpec synth_spec;
  std::vector<double> synth_noise;
  std::int64_t synth_seed = -1;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--spec", synth_spec_path, "Spec JSON (flags override it)");
  synth->add_option("--checkpoints", synth_spec.num_checkpoints, "Number of checkpoints");
  synth->add_option("--train", synth_spec.num_train, "Training examples");
  synth->add_option("--test", synth_spec.num_test, "Held-out examples for test error");
  synth->add_option("--dim", synth_spec.feature_dim, "Feature dimension");
  synth->add_option("--classes", synth_spec.num_classes, "Target classes");
  synth->add_option("--source-classes", synth_spec.num_source_classes,
                    "Source classes (0: same as target)");
  synth->add_option("--noise", synth_noise, "Noise level per checkpoint")->delimiter(',');
  synth->add_option("--seed", synth_seed, "Generator seed");

  OracleOptions oracle_opts;
  CLI::App* oracle = app.add_subcommand("oracle", "Run randomized oracle checks");
  oracle->add_option("--kind", oracle_opts.kind, "dirichlet-exact, gamma-mc, gradient-fd, hessian-fd")
      ->required()
      ->check(CLI::IsMember({"dirichlet-exact", "gamma-mc", "gradient-fd", "hessian-fd"}));
  oracle->add_option("--trials", oracle_opts.trials, "Number of random instances");
  oracle->add_option("--seed", oracle_opts.seed, "Trial seed");
  oracle->add_option("--samples", oracle_opts.mc_samples, "Monte Carlo samples per trial");
  oracle->add_option("--tolerance", oracle_opts.tolerance, "Override the per-kind tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (compute->parsed()) return run_compute(compute_opts);
    if (rank->parsed()) return run_rank(rank_opts, evaluation_path);
    if (evaluate->parsed()) {
      const nlohmann::json raw = read_json(eval_report_path);
      const ordered_json report = ordered_json::parse(raw.dump());
      const pactran::CheckpointManifest manifest = pactran::load_manifest(eval_manifest_path);
      const ordered_json evaluation = pactran::evaluate_ranking(report, manifest);
      if (!eval_out_path.empty()) write_json(eval_out_path, evaluation);
      std::fputs(pactran::format_evaluation_table(evaluation).c_str(), stdout);
      return 0;
    }
    if (synth->parsed()) {
      pactran::SyntheticSpec spec;
      if (!synth_spec_path.empty()) {
        spec = pactran::synthetic_spec_from_json(read_json(synth_spec_path));
      }
      if (synth->count("--checkpoints")) spec.num_checkpoints = synth_spec.num_checkpoints;
      if (synth->count("--train")) spec.num_train = synth_spec.num_train;
      if (synth->count("--test")) spec.num_test = synth_spec.num_test;
      if (synth->count("--dim")) spec.feature_dim = synth_spec.feature_dim;
      if (synth->count("--classes")) spec.num_classes = synth_spec.num_classes;
      if (synth->count("--source-classes")) {
        spec.num_source_classes = synth_spec.num_source_classes;
      }
      if (!synth_noise.empty()) spec.noise_levels = synth_noise;
      if (synth_seed >= 0) spec.seed = static_cast<std::uint64_t>(synth_seed);
      const pactran::SyntheticSummary summary =
          pactran::generate_synthetic_benchmark(spec, synth_out);
      std::printf("manifest: %s\n", summary.manifest_path.c_str());
      for (size_t i = 0; i < summary.test_errors.size(); ++i) {
        std::printf("ckpt%02zu noise=%.3f test_error=%.4f\n", i, summary.noise_levels[i],
                    summary.test_errors[i]);
      }
      return 0;
    }
    if (oracle->parsed()) return run_oracle(oracle_opts);
  } catch (const pactran::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pactran::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const pactran::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
