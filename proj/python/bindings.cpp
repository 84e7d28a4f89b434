#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "pactran/dataset.hpp"
#include "pactran/harness.hpp"
#include "pactran/kendall.hpp"
#include "pactran/leep.hpp"
#include "pactran/manifest.hpp"
#include "pactran/pactran_metrics.hpp"
#include "pactran/regression_metrics.hpp"
#include "pactran/tensor_io.hpp"

namespace py = pybind11;

namespace {

pactran::FeatureSet make_features(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                                  int num_classes) {
  return pactran::FeatureSet{features, labels, num_classes};
}

pactran::SourceDistribution make_source(const Eigen::MatrixXd& probs) {
  pactran::SourceDistribution source;
  source.probs = probs;
  return source;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transferability metrics for pretrained checkpoints";

  m.def(
      "leep",
      [](const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::leep_score(make_source(probs), labels, num_classes).score;
      },
      py::arg("source_probs"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "nce",
      [](const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::nce_score(make_source(probs), labels, num_classes);
      },
      py::arg("source_probs"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "nleep",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         double energy_fraction, int components, std::uint64_t seed) {
        return pactran::nleep_score(make_features(features, labels, num_classes),
                                    energy_fraction, components, seed)
            .score;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"),
      py::arg("energy_fraction") = 0.8, py::arg("components") = 0, py::arg("seed") = 0);
  m.def(
      "hscore",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::h_score(make_features(features, labels, num_classes));
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "logme",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::logme_score(make_features(features, labels, num_classes)).score;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "linear",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         double beta) {
        return pactran::linear_metric(make_features(features, labels, num_classes), beta).loss;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"), py::arg("beta"));
  m.def(
      "linear_valid",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         const std::vector<double>& beta_grid, std::uint64_t seed) {
        const auto r = pactran::linear_valid_metric(make_features(features, labels, num_classes),
                                                    beta_grid, seed);
        py::dict out;
        out["validation_error"] = r.validation_error;
        out["chosen_beta"] = r.chosen_beta;
        return out;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"), py::arg("beta_grid"),
      py::arg("seed") = 0);
  m.def(
      "pactran_dirichlet",
      [](const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::pactran_dirichlet(make_source(probs), labels, num_classes).score;
      },
      py::arg("source_probs"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "pactran_gamma",
      [](const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels, int num_classes) {
        return pactran::pactran_gamma(make_source(probs), labels, num_classes).score;
      },
      py::arg("source_probs"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "pactran_gaussian",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         double beta, double sigma0_sq) {
        const auto r = pactran::pactran_gaussian(make_features(features, labels, num_classes),
                                                 beta, sigma0_sq);
        py::dict out;
        out["score"] = r.score;
        out["empirical_risk"] = r.empirical_risk;
        out["flatness"] = r.flatness;
        out["variance_ratio"] = r.variance_ratio;
        out["trace_hessian"] = r.trace_hessian;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"), py::arg("beta"),
      py::arg("sigma0_sq"));
  m.def(
      "kendall_tau",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return pactran::kendall_tau(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "load_tensor",
      [](const std::filesystem::path& path) -> py::object {
        const pactran::Tensor tensor = pactran::load_tensor(path);
        std::vector<py::ssize_t> shape(tensor.dims.begin(), tensor.dims.end());
        py::array_t<double> out(shape);
        std::copy(tensor.values.begin(), tensor.values.end(),
                  static_cast<double*>(out.request().ptr));
        return out;
      },
      py::arg("path"));
  m.def("save_matrix", &pactran::save_matrix, py::arg("values"), py::arg("path"));
  m.def(
      "save_int_vector",
      [](const Eigen::VectorXi& values, const std::filesystem::path& path) {
        pactran::save_int_vector(values, path);
      },
      py::arg("values"), py::arg("path"));

  m.def(
      "run_metrics_json",
      [](const std::string& manifest_path, const std::string& config_json) {
        const pactran::CheckpointManifest manifest = pactran::load_manifest(manifest_path);
        const pactran::MetricConfig config =
            pactran::metric_config_from_json(nlohmann::json::parse(config_json));
        return pactran::run_metrics(manifest, config).dump();
      },
      py::arg("manifest_path"), py::arg("config_json") = "{}",
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate_json",
      [](const std::string& report_json, const std::string& manifest_path) {
        const auto report = nlohmann::ordered_json::parse(report_json);
        const pactran::CheckpointManifest manifest = pactran::load_manifest(manifest_path);
        return pactran::evaluate_ranking(report, manifest).dump();
      },
      py::arg("report_json"), py::arg("manifest_path"),
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "generate_synthetic_json",
      [](const std::string& spec_json, const std::filesystem::path& out_dir) {
        const pactran::SyntheticSpec spec =
            pactran::synthetic_spec_from_json(nlohmann::json::parse(spec_json));
        const pactran::SyntheticSummary summary =
            pactran::generate_synthetic_benchmark(spec, out_dir);
        nlohmann::ordered_json out;
        out["manifest_path"] = summary.manifest_path.string();
        out["noise_levels"] = summary.noise_levels;
        out["test_errors"] = summary.test_errors;
        return out.dump();
      },
      py::arg("spec_json"), py::arg("out_dir"), py::call_guard<py::gil_scoped_release>());
}
