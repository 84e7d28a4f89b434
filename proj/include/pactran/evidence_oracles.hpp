#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "pactran/dataset.hpp"

namespace pactran {

/// Exact log evidence of the Dirichlet-prior model by enumerating all |Z|^N
/// latent assignments (refused above 1e6 configurations, the error message
/// carrying the estimate). The variational score must satisfy
/// score >= -exact_log_evidence_dirichlet(...).
double exact_log_evidence_dirichlet(const SourceDistribution& source,
                                    const Eigen::VectorXi& labels, int num_classes,
                                    Eigen::VectorXd alpha_prior = {});

/// log p(labels | probs, V) under the Gamma-prior model for one weight matrix
/// V (K x |Z|): sum_i log(sum_z M_iz v_{y_i z} / sum_{y,z} M_iz v_{yz}).
/// Exactly invariant under scaling V by a positive constant.
double gamma_model_log_likelihood(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                  const Eigen::MatrixXd& v);

struct McEvidence {
  double estimate = 0.0;        // log of the Monte Carlo evidence mean
  double standard_error = 0.0;  // delta-method SE on the log scale
  int num_samples = 0;
};

/// Monte Carlo evidence for the Gamma-prior model: V ~ prod Gamma(a_y, 1)
/// prior draws, Z_hat = mean_s prod_i p(y_i | x_i, V_s), reported on the log
/// scale. The variational score must satisfy score >= -(estimate + 3 SE).
McEvidence mc_log_evidence_gamma(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                 int num_classes, Eigen::VectorXd a_prior = {},
                                 int num_samples = 100000, std::uint64_t seed = 0);

/// Central finite-difference gradient of a scalar function of a flat vector.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& at, double step = 1e-5);

/// Central finite-difference Hessian trace: sum_j of the second difference
/// along each coordinate axis.
double fd_hessian_trace(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& at, double step = 1e-4);

}  // namespace pactran
