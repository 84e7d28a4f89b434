#pragma once

#include <Eigen/Core>
#include <vector>

#include "pactran/dataset.hpp"
#include "pactran/optimize.hpp"

namespace pactran {

/// PAC-Bayesian transferability scores. All three are bounds on the
/// generalization of the transferred head, so LOWER is better; the harness
/// handles orientation when ranking.

/// Empirical class frequencies floored at 1 / (10 N), the default prior for
/// the Dirichlet and Gamma variants.
Eigen::VectorXd default_class_prior(const Eigen::VectorXi& labels, int num_classes);

struct DirichletState {
  Eigen::MatrixXd q;            // N x |Z| variational assignments
  Eigen::MatrixXd alpha_tilde;  // K x |Z| posterior concentrations
  Eigen::VectorXd alpha_prior;  // K
  std::vector<double> elbo_trace;  // after initialization and each sweep
  int sweeps = 0;
  bool converged = false;
  bool clamped = false;  // a digamma/log-gamma argument hit the 1e-12 floor
};

struct DirichletResult {
  double score = 0.0;  // negative optimal ELBO
  DirichletState state;
};

/// Dirichlet-prior variant: coordinate-ascent variational bound with the
/// q-then-alpha update order, at most max_sweeps sweeps, stopping when the
/// ELBO gains less than tolerance. Requires normalized source rows. Exactly
/// invariant under permuting source classes.
DirichletResult pactran_dirichlet(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                  int num_classes, Eigen::VectorXd alpha_prior = {},
                                  int max_sweeps = 10, double tolerance = 1e-6);

struct GammaState {
  Eigen::MatrixXd q;        // N x |Z|
  Eigen::MatrixXd a_tilde;  // K x |Z| posterior shapes (variational rate fixed at 1)
  Eigen::VectorXd lambda_tilde;  // N
  Eigen::VectorXd a_prior;       // K
  std::vector<double> elbo_trace;
  int sweeps = 0;
  bool converged = false;
  bool clamped = false;
};

struct GammaResult {
  double score = 0.0;
  GammaState state;
};

/// Gamma-prior variant over unnormalized source scores: entries must be
/// non-negative with positive row sums; rows need not be normalized.
GammaResult pactran_gamma(const SourceDistribution& source, const Eigen::VectorXi& labels,
                          int num_classes, Eigen::VectorXd a_prior = {}, int max_sweeps = 10,
                          double tolerance = 1e-6);

/// Exact trace of the Hessian of the mean cross-entropy (weights + bias
/// blocks) at theta; labels enter validation only.
double trace_hessian_ce(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                        const Eigen::MatrixXd& theta);

struct GaussResult {
  Eigen::MatrixXd theta_star;   // (D+1) x K
  double empirical_risk = 0.0;  // RER: cross-entropy + ||theta||^2/(2 beta)
  double flatness = 0.0;        // FR: K D_eff sigma0^2 / (2 beta) * ln(variance ratio)
  double score = 0.0;           // RER + FR
  double variance_ratio = 1.0;  // sigma0^2 / sigma*^2 >= 1
  double trace_hessian = 0.0;
  double beta = 0.0;
  double sigma0_sq = 0.0;
  double lambda = 0.0;  // beta / sigma0^2
  bool converged = false;
};

/// Gaussian-prior variant on raw features: L2 softmax fit (flatness ignored
/// during optimization), then the closed-form posterior-variance correction
/// with D_eff = D + 1 (the bias counts as a dimension).
GaussResult pactran_gaussian(const FeatureSet& data, double beta, double sigma0_sq,
                             const OptimizerConfig& config = {});

}  // namespace pactran
