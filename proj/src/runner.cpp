#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "pactran/classifier.hpp"
#include "pactran/dataset.hpp"
#include "pactran/errors.hpp"
#include "pactran/harness.hpp"
#include "pactran/kendall.hpp"
#include "pactran/leep.hpp"
#include "pactran/pactran_metrics.hpp"
#include "pactran/regression_metrics.hpp"
#include "pactran/special.hpp"
#include "pactran/tensor_io.hpp"

namespace pactran {

namespace {

using nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct GaussPair {
  double beta_factor = 0.0;
  double sigma0_numerator = 0.0;
};

struct GaussCell {
  double rer = kNan, fr = kNan, score = kNan, ratio = kNan, trace_h = kNan;
  bool converged = false;
  bool ok = false;
  std::string flag;
};

struct CellResult {
  std::map<std::string, double> raw;          // natural orientation
  std::map<std::string, std::string> flags;   // metric -> failure/diagnostic
  std::map<std::string, ordered_json> extra;  // metric -> small diagnostics
  std::vector<double> linear_losses;          // per beta factor, NaN on failure
  bool linear_ok = false;
  std::vector<GaussCell> gauss_grid;  // per pair, grid order
  double lv_error = kNan;
  double lv_beta = kNan;
  bool lv_ok = false;
};

struct CheckpointData {
  bool ok = false;
  std::string error;
  Eigen::MatrixXd features;
  std::optional<SourceDistribution> source;
};

bool metric_enabled(const std::vector<std::string>& enabled, const std::string& name) {
  return std::find(enabled.begin(), enabled.end(), name) != enabled.end();
}

std::string describe_error(const std::exception& e) { return e.what(); }

// Kendall tau over the checkpoints where both vectors are finite; NaN when
// fewer than two remain.
double tau_over_finite(std::span<const double> a, std::span<const double> b) {
  std::vector<double> xa, xb;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      xa.push_back(a[i]);
      xb.push_back(b[i]);
    }
  }
  if (xa.size() < 2) return kNan;
  return kendall_tau(xa, xb);
}

ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

CellResult compute_cell(const CheckpointData& data, const Eigen::VectorXi& task_labels,
                        int num_classes, const std::vector<int>& indices,
                        const MetricConfig& config, const std::vector<std::string>& enabled,
                        bool need_linear_valid, const std::vector<GaussPair>& gauss_pairs,
                        std::uint64_t cell_seed) {
  CellResult cell;
  if (!data.ok) {
    for (const auto& name : enabled) cell.flags[name] = data.error;
    cell.linear_losses.assign(config.beta_factors.size(), kNan);
    cell.gauss_grid.assign(gauss_pairs.size(), GaussCell{});
    return cell;
  }

  FeatureSet full;
  full.features = data.features;
  full.labels = task_labels;
  full.num_classes = num_classes;
  const FeatureSet sub = take_rows(full, indices);
  std::optional<SourceDistribution> sub_source;
  if (data.source) sub_source = take_rows(*data.source, indices);

  const double n = static_cast<double>(indices.size());
  const double d_eff = static_cast<double>(sub.features.cols() + 1);

  auto need_source = [&](const char* metric) -> bool {
    if (!sub_source) {
      cell.flags[metric] = "source probabilities unavailable";
      return false;
    }
    return true;
  };

  if (metric_enabled(enabled, "leep") && need_source("leep")) {
    try {
      const LeepResult r = leep_score(*sub_source, sub.labels, num_classes);
      cell.raw["leep"] = r.score;
      if (r.degenerate) cell.flags["leep"] = "degenerate: zero predictive mass";
    } catch (const std::exception& e) {
      cell.flags["leep"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "nce") && need_source("nce")) {
    try {
      cell.raw["nce"] = nce_score(*sub_source, sub.labels, num_classes);
    } catch (const std::exception& e) {
      cell.flags["nce"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "nleep")) {
    try {
      const int components =
          config.nleep_components > 0 ? config.nleep_components : num_classes;
      const NleepResult r = nleep_score(sub, config.nleep_energy_fraction, components,
                                        mix_seed(cell_seed, 1));
      cell.raw["nleep"] = r.score;
      ordered_json extra;
      extra["reduced_dim"] = r.reduced_dim;
      cell.extra["nleep"] = std::move(extra);
    } catch (const std::exception& e) {
      cell.flags["nleep"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "hscore")) {
    try {
      cell.raw["hscore"] = h_score(sub);
    } catch (const std::exception& e) {
      cell.flags["hscore"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "logme")) {
    try {
      cell.raw["logme"] = logme_score(sub).score;
    } catch (const std::exception& e) {
      cell.flags["logme"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "linear")) {
    for (double factor : config.beta_factors) {
      try {
        cell.linear_losses.push_back(linear_metric(sub, factor * n).loss);
        cell.linear_ok = true;
      } catch (const std::exception& e) {
        cell.linear_losses.push_back(kNan);
        cell.flags["linear"] = describe_error(e);
      }
    }
  }
  if (need_linear_valid) {
    try {
      std::vector<double> grid;
      for (double factor : config.beta_factors) grid.push_back(factor * n);
      const LinearValidResult r = linear_valid_metric(sub, grid, mix_seed(cell_seed, 2));
      cell.lv_error = r.validation_error;
      cell.lv_beta = r.chosen_beta;
      cell.lv_ok = true;
      if (r.fold_missing_class) cell.flags["linear-valid"] = "a fold lost a class";
    } catch (const std::exception& e) {
      cell.flags["linear-valid"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "pt-dir") && need_source("pt-dir")) {
    try {
      const DirichletResult r = pactran_dirichlet(*sub_source, sub.labels, num_classes);
      cell.raw["pt-dir"] = r.score;
      ordered_json extra;
      extra["sweeps"] = r.state.sweeps;
      extra["converged"] = r.state.converged;
      cell.extra["pt-dir"] = std::move(extra);
    } catch (const std::exception& e) {
      cell.flags["pt-dir"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "pt-gam") && need_source("pt-gam")) {
    try {
      const GammaResult r = pactran_gamma(*sub_source, sub.labels, num_classes);
      cell.raw["pt-gam"] = r.score;
      ordered_json extra;
      extra["sweeps"] = r.state.sweeps;
      extra["converged"] = r.state.converged;
      cell.extra["pt-gam"] = std::move(extra);
    } catch (const std::exception& e) {
      cell.flags["pt-gam"] = describe_error(e);
    }
  }
  if (metric_enabled(enabled, "pt-gauss")) {
    for (const GaussPair& pair : gauss_pairs) {
      GaussCell g;
      try {
        const GaussResult r =
            pactran_gaussian(sub, pair.beta_factor * n, pair.sigma0_numerator / d_eff);
        g.rer = r.empirical_risk;
        g.fr = r.flatness;
        g.score = r.score;
        g.ratio = r.variance_ratio;
        g.trace_h = r.trace_hessian;
        g.converged = r.converged;
        g.ok = true;
      } catch (const std::exception& e) {
        g.flag = describe_error(e);
      }
      cell.gauss_grid.push_back(std::move(g));
    }
  }
  return cell;
}

}  // namespace

const std::vector<std::string>& all_metric_names() {
  static const std::vector<std::string> names = {"leep",  "nce",    "nleep",        "hscore",
                                                 "logme", "linear", "linear-valid", "pt-dir",
                                                 "pt-gam", "pt-gauss"};
  return names;
}

double robust_std(std::span<const double> values) {
  if (values.empty()) return kNan;
  std::vector<double> v(values.begin(), values.end());
  auto median_of = [](std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const size_t n = x.size();
    return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
  };
  const double center = median_of(v);
  for (double& x : v) x = std::abs(x - center);
  return 1.4826 * median_of(v);
}

int resolve_worker_count(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("PACTRAN_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

MetricConfig metric_config_from_json(const nlohmann::json& doc) {
  MetricConfig config;
  if (doc.contains("metrics")) config.metrics = doc["metrics"].get<std::vector<std::string>>();
  if (doc.contains("pt_gauss_mode")) {
    const std::string mode = doc["pt_gauss_mode"].get<std::string>();
    if (mode != "fix" && mode != "grid") {
      throw ValidationError("pt_gauss_mode must be \"fix\" or \"grid\"");
    }
    config.pt_gauss_grid = mode == "grid";
  }
  if (doc.contains("beta_factors")) {
    config.beta_factors = doc["beta_factors"].get<std::vector<double>>();
  }
  if (doc.contains("sigma0_numerators")) {
    config.sigma0_numerators = doc["sigma0_numerators"].get<std::vector<double>>();
  }
  if (doc.contains("fixed_beta_factor")) {
    config.fixed_beta_factor = doc["fixed_beta_factor"].get<double>();
  }
  if (doc.contains("fixed_sigma0_numerator")) {
    config.fixed_sigma0_numerator = doc["fixed_sigma0_numerator"].get<double>();
  }
  if (doc.contains("nleep_energy_fraction")) {
    config.nleep_energy_fraction = doc["nleep_energy_fraction"].get<double>();
  }
  if (doc.contains("nleep_components")) {
    config.nleep_components = doc["nleep_components"].get<int>();
  }
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
  if (doc.contains("subsample")) {
    const auto& sub = doc["subsample"];
    if (sub.contains("samples_per_class")) {
      config.subsample.samples_per_class = sub["samples_per_class"].get<int>();
    }
    if (sub.contains("min_total")) config.subsample.min_total = sub["min_total"].get<int>();
    if (sub.contains("num_splits")) config.subsample.num_splits = sub["num_splits"].get<int>();
    config.subsample.seed = config.seed;
    if (sub.contains("seed")) config.subsample.seed = sub["seed"].get<std::uint64_t>();
  } else {
    config.subsample.seed = config.seed;
  }
  return config;
}

nlohmann::ordered_json metric_config_to_json(const MetricConfig& config) {
  ordered_json out;
  out["metrics"] = config.metrics.empty() ? all_metric_names() : config.metrics;
  out["pt_gauss_mode"] = config.pt_gauss_grid ? "grid" : "fix";
  out["beta_factors"] = config.beta_factors;
  out["sigma0_numerators"] = config.sigma0_numerators;
  out["fixed_beta_factor"] = config.fixed_beta_factor;
  out["fixed_sigma0_numerator"] = config.fixed_sigma0_numerator;
  out["nleep_energy_fraction"] = config.nleep_energy_fraction;
  out["nleep_components"] = config.nleep_components;
  out["seed"] = config.seed;
  return out;
}

nlohmann::ordered_json run_metrics(const CheckpointManifest& manifest,
                                   const MetricConfig& config) {
  if (manifest.entries.empty()) throw ValidationError("run_metrics: empty manifest");

  std::vector<std::string> enabled = config.metrics.empty() ? all_metric_names() : config.metrics;
  for (const auto& name : enabled) {
    if (!metric_enabled(all_metric_names(), name)) {
      throw ValidationError("run_metrics: unknown metric \"" + name + "\"");
    }
  }
  MetricConfig cfg = config;
  std::sort(cfg.beta_factors.begin(), cfg.beta_factors.end());
  std::sort(cfg.sigma0_numerators.begin(), cfg.sigma0_numerators.end());
  if (cfg.beta_factors.empty() || cfg.sigma0_numerators.empty()) {
    throw ValidationError("run_metrics: empty hyperparameter grid");
  }

  // The first checkpoint's labels define the task; every checkpoint must
  // agree so subsample indices transfer across checkpoints.
  const Eigen::VectorXi task_labels = load_int_vector(manifest.entries.front().labels_path);
  if (task_labels.size() == 0) throw ValidationError("run_metrics: empty task labels");
  int num_classes = 0;
  for (Eigen::Index i = 0; i < task_labels.size(); ++i) {
    if (task_labels[i] < 0) throw ValidationError("run_metrics: negative label");
    num_classes = std::max(num_classes, task_labels[i] + 1);
  }

  const bool need_linear_valid = metric_enabled(enabled, "linear-valid") ||
                                 metric_enabled(enabled, "linear") ||
                                 (metric_enabled(enabled, "pt-gauss") && cfg.pt_gauss_grid);

  std::vector<GaussPair> gauss_pairs;
  if (metric_enabled(enabled, "pt-gauss")) {
    if (cfg.pt_gauss_grid) {
      for (double bf : cfg.beta_factors) {
        for (double sn : cfg.sigma0_numerators) gauss_pairs.push_back({bf, sn});
      }
    } else {
      gauss_pairs.push_back({cfg.fixed_beta_factor, cfg.fixed_sigma0_numerator});
    }
  }

  const int num_checkpoints = static_cast<int>(manifest.entries.size());
  std::vector<CheckpointData> data(num_checkpoints);
  for (int c = 0; c < num_checkpoints; ++c) {
    const CheckpointEntry& entry = manifest.entries[c];
    CheckpointData& slot = data[c];
    try {
      slot.features = load_matrix(entry.features_path);
      const Eigen::VectorXi labels = load_int_vector(entry.labels_path);
      if (labels.size() != task_labels.size() ||
          !(labels.array() == task_labels.array()).all()) {
        throw ValidationError("labels disagree with the task labels");
      }
      if (slot.features.rows() != task_labels.size()) {
        throw ValidationError("feature rows disagree with the task labels");
      }
      if (entry.source_probs_path) {
        SourceDistribution source;
        source.probs = load_matrix(*entry.source_probs_path);
        if (source.probs.rows() != task_labels.size()) {
          throw ValidationError("source probability rows disagree with the task labels");
        }
        slot.source = std::move(source);
      }
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.error = std::string("checkpoint load failed: ") + e.what();
    }
  }

  const int num_splits = cfg.subsample.num_splits;
  std::vector<std::vector<int>> split_indices(num_splits);
  for (int s = 0; s < num_splits; ++s) {
    split_indices[s] = subsample_indices(task_labels, num_classes, cfg.subsample, s);
  }

  // Parallel cells: results land in preassigned slots, so scheduling cannot
  // affect the report.
  std::vector<CellResult> cells(static_cast<size_t>(num_checkpoints) * num_splits);
  {
    std::atomic<size_t> next{0};
    const size_t total = cells.size();
    auto work = [&]() {
      while (true) {
        const size_t at = next.fetch_add(1);
        if (at >= total) break;
        const int c = static_cast<int>(at) / num_splits;
        const int s = static_cast<int>(at) % num_splits;
        const std::uint64_t cell_seed =
            mix_seed(cfg.seed, fnv1a(manifest.entries[c].id), static_cast<std::uint64_t>(s));
        cells[at] = compute_cell(data[c], task_labels, num_classes, split_indices[s], cfg,
                                 enabled, need_linear_valid, gauss_pairs, cell_seed);
      }
    };
    const int workers =
        std::min<int>(resolve_worker_count(cfg.workers), static_cast<int>(total));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  }
  auto cell_at = [&](int c, int s) -> CellResult& {
    return cells[static_cast<size_t>(c) * num_splits + s];
  };

  // Per-split hyperparameter selection against the LINEAR-VALID errors.
  struct SplitSelection {
    int linear_beta_index = 0;
    double linear_tau = kNan;
    int gauss_pair_index = 0;
    double gauss_tau = kNan;
  };
  std::vector<SplitSelection> selections(num_splits);
  std::vector<std::vector<double>> lv_errors(num_splits,
                                             std::vector<double>(num_checkpoints, kNan));
  for (int s = 0; s < num_splits; ++s) {
    for (int c = 0; c < num_checkpoints; ++c) lv_errors[s][c] = cell_at(c, s).lv_error;
  }
  std::vector<std::vector<double>> linear_tau_by_beta(cfg.beta_factors.size());
  std::vector<std::vector<double>> gauss_tau_by_pair(gauss_pairs.size());
  for (int s = 0; s < num_splits; ++s) {
    SplitSelection& sel = selections[s];
    if (metric_enabled(enabled, "linear")) {
      for (size_t b = 0; b < cfg.beta_factors.size(); ++b) {
        std::vector<double> losses(num_checkpoints, kNan);
        for (int c = 0; c < num_checkpoints; ++c) {
          const CellResult& cell = cell_at(c, s);
          if (b < cell.linear_losses.size()) losses[c] = cell.linear_losses[b];
        }
        const double tau = tau_over_finite(losses, lv_errors[s]);
        linear_tau_by_beta[b].push_back(tau);
        if (std::isfinite(tau) && (!std::isfinite(sel.linear_tau) || tau > sel.linear_tau)) {
          sel.linear_tau = tau;
          sel.linear_beta_index = static_cast<int>(b);
        }
      }
    }
    if (!gauss_pairs.empty()) {
      for (size_t p = 0; p < gauss_pairs.size(); ++p) {
        std::vector<double> scores(num_checkpoints, kNan);
        for (int c = 0; c < num_checkpoints; ++c) {
          const GaussCell& g = cell_at(c, s).gauss_grid[p];
          if (g.ok) scores[c] = g.score;
        }
        const double tau = tau_over_finite(scores, lv_errors[s]);
        gauss_tau_by_pair[p].push_back(tau);
        if (std::isfinite(tau) && (!std::isfinite(sel.gauss_tau) || tau > sel.gauss_tau)) {
          sel.gauss_tau = tau;
          sel.gauss_pair_index = static_cast<int>(p);
        }
      }
    }
  }

  ordered_json report;
  report["schema"] = "ranking-report/1";
  report["config"] = metric_config_to_json(cfg);
  {
    ordered_json sub;
    sub["samples_per_class"] = cfg.subsample.samples_per_class;
    sub["min_total"] = cfg.subsample.min_total;
    sub["num_splits"] = cfg.subsample.num_splits;
    sub["seed"] = cfg.subsample.seed;
    report["subsample"] = std::move(sub);
  }
  report["num_classes"] = num_classes;
  report["checkpoints"] = ordered_json::array();
  report["test_errors"] = ordered_json::object();
  for (const auto& entry : manifest.entries) {
    report["checkpoints"].push_back(entry.id);
    report["test_errors"][entry.id] =
        entry.test_error ? ordered_json(*entry.test_error) : ordered_json(nullptr);
  }

  report["splits"] = ordered_json::array();
  for (int s = 0; s < num_splits; ++s) {
    ordered_json split;
    split["split_index"] = s;
    split["num_examples"] = split_indices[s].size();
    split["indices"] = split_indices[s];
    ordered_json metrics = ordered_json::object();
    for (const auto& name : enabled) {
      ordered_json entry;
      ordered_json scores = ordered_json::object();
      ordered_json flags = ordered_json::object();
      for (int c = 0; c < num_checkpoints; ++c) {
        const std::string& id = manifest.entries[c].id;
        const CellResult& cell = cell_at(c, s);
        double oriented = kNan;
        if (name == "linear") {
          const size_t b = static_cast<size_t>(selections[s].linear_beta_index);
          if (b < cell.linear_losses.size() && std::isfinite(cell.linear_losses[b])) {
            oriented = -cell.linear_losses[b];
          }
        } else if (name == "linear-valid") {
          if (cell.lv_ok) oriented = 1.0 - cell.lv_error;
        } else if (name == "pt-gauss") {
          const GaussCell& g = cell.gauss_grid[selections[s].gauss_pair_index];
          if (g.ok) oriented = -g.score;
        } else if (auto it = cell.raw.find(name); it != cell.raw.end()) {
          const bool lower_is_better = name == "pt-dir" || name == "pt-gam";
          oriented = lower_is_better ? -it->second : it->second;
        }
        scores[id] = number_or_null(oriented);
        if (auto it = cell.flags.find(name); it != cell.flags.end()) flags[id] = it->second;
      }
      entry["scores"] = std::move(scores);
      if (!flags.empty()) entry["flags"] = std::move(flags);
      if (name == "linear") {
        entry["beta_factor"] = cfg.beta_factors[selections[s].linear_beta_index];
        entry["selection_tau"] = number_or_null(selections[s].linear_tau);
      }
      if (name == "linear-valid") {
        ordered_json chosen = ordered_json::object();
        for (int c = 0; c < num_checkpoints; ++c) {
          const CellResult& cell = cell_at(c, s);
          chosen[manifest.entries[c].id] = number_or_null(cell.lv_beta);
        }
        entry["chosen_beta"] = std::move(chosen);
      }
      if (name == "pt-gauss") {
        const GaussPair& pair = gauss_pairs[selections[s].gauss_pair_index];
        entry["beta_factor"] = pair.beta_factor;
        entry["sigma0_numerator"] = pair.sigma0_numerator;
        entry["selection_tau"] = number_or_null(selections[s].gauss_tau);
        ordered_json rer = ordered_json::object(), fr = ordered_json::object();
        for (int c = 0; c < num_checkpoints; ++c) {
          const GaussCell& g = cell_at(c, s).gauss_grid[selections[s].gauss_pair_index];
          rer[manifest.entries[c].id] = number_or_null(g.rer);
          fr[manifest.entries[c].id] = number_or_null(g.fr);
        }
        entry["empirical_risk"] = std::move(rer);
        entry["flatness"] = std::move(fr);
      }
      metrics[name] = std::move(entry);
    }
    split["metrics"] = std::move(metrics);
    report["splits"].push_back(std::move(split));
  }

  // Hyperparameter summary: the per-split choices plus the shared choice that
  // maximizes the summed selection tau.
  ordered_json hparams = ordered_json::object();
  auto shared_argmax = [](const std::vector<std::vector<double>>& taus) {
    int best = 0;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < taus.size(); ++i) {
      double sum = 0.0;
      int count = 0;
      for (double t : taus[i]) {
        if (std::isfinite(t)) {
          sum += t;
          ++count;
        }
      }
      if (count > 0 && sum > best_sum) {
        best_sum = sum;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  if (metric_enabled(enabled, "linear")) {
    ordered_json lin;
    lin["per_split_beta_factor"] = ordered_json::array();
    for (int s = 0; s < num_splits; ++s) {
      lin["per_split_beta_factor"].push_back(cfg.beta_factors[selections[s].linear_beta_index]);
    }
    lin["shared_beta_factor"] = cfg.beta_factors[shared_argmax(linear_tau_by_beta)];
    hparams["linear"] = std::move(lin);
  }
  if (!gauss_pairs.empty()) {
    ordered_json gauss;
    gauss["mode"] = cfg.pt_gauss_grid ? "grid" : "fix";
    gauss["per_split"] = ordered_json::array();
    for (int s = 0; s < num_splits; ++s) {
      const GaussPair& pair = gauss_pairs[selections[s].gauss_pair_index];
      ordered_json row;
      row["split_index"] = s;
      row["beta_factor"] = pair.beta_factor;
      row["sigma0_numerator"] = pair.sigma0_numerator;
      gauss["per_split"].push_back(std::move(row));
    }
    const GaussPair& shared = gauss_pairs[shared_argmax(gauss_tau_by_pair)];
    ordered_json shared_row;
    shared_row["beta_factor"] = shared.beta_factor;
    shared_row["sigma0_numerator"] = shared.sigma0_numerator;
    gauss["shared"] = std::move(shared_row);
    hparams["pt-gauss"] = std::move(gauss);
  }
  report["hparams"] = std::move(hparams);

  // Flatness/risk dispersion diagnostic, one row per (split, pair).
  ordered_json ratio_rows = ordered_json::array();
  for (int s = 0; s < num_splits; ++s) {
    for (size_t p = 0; p < gauss_pairs.size(); ++p) {
      std::vector<double> rer, fr;
      for (int c = 0; c < num_checkpoints; ++c) {
        const GaussCell& g = cell_at(c, s).gauss_grid[p];
        if (g.ok) {
          rer.push_back(g.rer);
          fr.push_back(g.fr);
        }
      }
      if (rer.size() < 2) continue;
      const double rer_std = robust_std(rer);
      const double fr_std = robust_std(fr);
      ordered_json row;
      row["split_index"] = s;
      row["beta_factor"] = gauss_pairs[p].beta_factor;
      row["sigma0_numerator"] = gauss_pairs[p].sigma0_numerator;
      row["rer_robust_std"] = rer_std;
      row["fr_robust_std"] = fr_std;
      row["std_ratio"] = number_or_null(rer_std > 0.0 ? fr_std / rer_std : kNan);
      ratio_rows.push_back(std::move(row));
    }
  }
  ordered_json diagnostics;
  diagnostics["std_ratio"] = std::move(ratio_rows);
  report["diagnostics"] = std::move(diagnostics);
  return report;
}

nlohmann::ordered_json evaluate_ranking(const nlohmann::ordered_json& report,
                                        const CheckpointManifest& manifest) {
  std::map<std::string, double> errors;
  std::vector<std::string> missing;
  for (const auto& entry : manifest.entries) {
    if (entry.test_error) {
      errors[entry.id] = *entry.test_error;
    } else {
      missing.push_back(entry.id);
    }
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& id : missing) joined += (joined.empty() ? "" : ", ") + id;
    throw ValidationError("evaluate_ranking: checkpoints missing test_error: " + joined);
  }
  if (!report.contains("splits") || !report.contains("checkpoints")) {
    throw ValidationError("evaluate_ranking: malformed report");
  }
  std::vector<std::string> ids;
  for (const auto& id : report["checkpoints"]) {
    const std::string s = id.get<std::string>();
    if (!errors.count(s)) {
      throw ValidationError("evaluate_ranking: manifest has no entry for checkpoint " + s);
    }
    ids.push_back(s);
  }

  ordered_json evaluation;
  evaluation["schema"] = "ranking-evaluation/1";
  evaluation["num_checkpoints"] = ids.size();
  evaluation["metrics"] = ordered_json::object();

  std::vector<std::string> metric_names;
  if (!report["splits"].empty()) {
    for (auto it = report["splits"][0]["metrics"].begin();
         it != report["splits"][0]["metrics"].end(); ++it) {
      metric_names.push_back(it.key());
    }
  }
  for (const auto& name : metric_names) {
    std::vector<double> taus;
    ordered_json per_split = ordered_json::array();
    for (const auto& split : report["splits"]) {
      std::vector<double> scores, neg_errors;
      for (const auto& id : ids) {
        const auto& value = split["metrics"][name]["scores"][id];
        if (value.is_number()) {
          scores.push_back(value.get<double>());
          neg_errors.push_back(-errors[id]);
        }
      }
      const double tau = scores.size() >= 2 ? tau_over_finite(scores, neg_errors) : kNan;
      per_split.push_back(number_or_null(tau));
      if (std::isfinite(tau)) taus.push_back(tau);
    }
    ordered_json entry;
    entry["per_split_tau"] = std::move(per_split);
    if (!taus.empty()) {
      double mean = 0.0;
      for (double t : taus) mean += t;
      mean /= static_cast<double>(taus.size());
      double var = 0.0;
      for (double t : taus) var += (t - mean) * (t - mean);
      const double stderr_value =
          taus.size() > 1 ? std::sqrt(var / (taus.size() - 1) / taus.size()) : 0.0;
      entry["mean_tau"] = mean;
      entry["stderr"] = stderr_value;
    } else {
      entry["mean_tau"] = nullptr;
      entry["stderr"] = nullptr;
    }
    evaluation["metrics"][name] = std::move(entry);
  }
  if (report.contains("diagnostics")) evaluation["diagnostics"] = report["diagnostics"];
  return evaluation;
}

std::string format_evaluation_table(const nlohmann::ordered_json& evaluation) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %10s %10s  %s\n", "metric", "mean_tau", "stderr",
                "per-split tau");
  out += line;
  out += std::string(60, '-') + "\n";
  for (auto it = evaluation["metrics"].begin(); it != evaluation["metrics"].end(); ++it) {
    const auto& entry = it.value();
    std::string splits;
    for (const auto& tau : entry["per_split_tau"]) {
      char cell[32];
      if (tau.is_number()) {
        std::snprintf(cell, sizeof(cell), "%6.3f", tau.get<double>());
      } else {
        std::snprintf(cell, sizeof(cell), "%6s", "-");
      }
      splits += cell;
      splits += " ";
    }
    if (entry["mean_tau"].is_number()) {
      std::snprintf(line, sizeof(line), "%-14s %10.4f %10.4f  %s\n", it.key().c_str(),
                    entry["mean_tau"].get<double>(), entry["stderr"].get<double>(),
                    splits.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%-14s %10s %10s  %s\n", it.key().c_str(), "-", "-",
                    splits.c_str());
    }
    out += line;
  }
  return out;
}

std::string std_ratio_csv(const nlohmann::ordered_json& report) {
  std::string out = "split_index,beta_factor,sigma0_numerator,rer_robust_std,fr_robust_std,std_ratio\n";
  if (!report.contains("diagnostics") || !report["diagnostics"].contains("std_ratio")) return out;
  char line[256];
  for (const auto& row : report["diagnostics"]["std_ratio"]) {
    const double ratio = row["std_ratio"].is_number() ? row["std_ratio"].get<double>() : kNan;
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  row["split_index"].get<int>(), row["beta_factor"].get<double>(),
                  row["sigma0_numerator"].get<double>(), row["rer_robust_std"].get<double>(),
                  row["fr_robust_std"].get<double>(), ratio);
    out += line;
  }
  return out;
}

}  // namespace pactran
