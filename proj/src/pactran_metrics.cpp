#include "pactran/pactran_metrics.hpp"

#include <cmath>
#include <limits>

#include "pactran/classifier.hpp"
#include "pactran/errors.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

constexpr double kArgFloor = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double floored_log_gamma(double x, bool& clamped) {
  if (x < kArgFloor) {
    clamped = true;
    x = kArgFloor;
  }
  return log_gamma(x);
}

double floored_digamma(double x, bool& clamped) {
  if (x < kArgFloor) {
    clamped = true;
    x = kArgFloor;
  }
  return digamma(x);
}

// log C(v) = lgamma(sum v) - sum_y lgamma(v_y); the y-reduction keeps its
// natural order (source-class permutations act on columns, not on y).
double log_dirichlet_norm(const Eigen::VectorXd& v, bool& clamped) {
  double total = 0.0;
  double sum = 0.0;
  for (Eigen::Index y = 0; y < v.size(); ++y) {
    total -= floored_log_gamma(v[y], clamped);
    sum += v[y];
  }
  return total + floored_log_gamma(sum, clamped);
}

void validate_prior(const Eigen::VectorXd& prior, int num_classes, const char* fn) {
  if (prior.size() != num_classes) {
    throw ValidationError(std::string(fn) + ": prior size != num_classes");
  }
  for (Eigen::Index y = 0; y < prior.size(); ++y) {
    if (!(prior[y] > 0.0) || !std::isfinite(prior[y])) {
      throw ValidationError(std::string(fn) + ": prior entries must be positive");
    }
  }
}

// Row-normalized copy of the source probabilities (variational q start).
Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& probs) {
  Eigen::MatrixXd q = probs;
  std::vector<double> row(probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index z = 0; z < probs.cols(); ++z) row[z] = probs(i, z);
    const double sum = sum_sorted(row);
    q.row(i) /= sum;
  }
  return q;
}

// K x |Z| soft counts: n_yz = sum_i q_i(z) [y_i = y].
Eigen::MatrixXd soft_counts(const Eigen::MatrixXd& q, const Eigen::VectorXi& labels,
                            int num_classes) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) counts.row(labels[i]) += q.row(i);
  return counts;
}

// sum_i sum_z q (log q - log M) with 0 log 0 = 0 and zero-M entries pinned
// to q = 0; inner reductions are permutation-exact.
double assignment_divergence(const Eigen::MatrixXd& q, const Eigen::MatrixXd& log_m) {
  std::vector<double> terms(q.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index z = 0; z < q.cols(); ++z) {
      const double qi = q(i, z);
      terms[z] = qi > 0.0 ? qi * (std::log(qi) - log_m(i, z)) : 0.0;
    }
    total += sum_sorted(terms);
  }
  return total;
}

Eigen::MatrixXd elementwise_log(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(i, j) = m(i, j) > 0.0 ? std::log(m(i, j)) : kNegInf;
    }
  }
  return out;
}

// Row softmax of logits with -inf entries pinned to zero; permutation-exact.
void softmax_rows_masked(Eigen::MatrixXd& logits) {
  std::vector<double> row(logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index z = 0; z < logits.cols(); ++z) row[z] = logits(i, z);
    const double lse = log_sum_exp(std::span<const double>(row));
    for (Eigen::Index z = 0; z < logits.cols(); ++z) {
      logits(i, z) = logits(i, z) == kNegInf ? 0.0 : std::exp(logits(i, z) - lse);
    }
  }
}

}  // namespace

Eigen::VectorXd default_class_prior(const Eigen::VectorXi& labels, int num_classes) {
  if (labels.size() == 0) throw ValidationError("default_class_prior: empty labels");
  const double n = static_cast<double>(labels.size());
  Eigen::VectorXd prior = Eigen::VectorXd::Zero(num_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) throw ValidationError("default_class_prior: label out of range");
    prior[y] += 1.0 / n;
  }
  const double floor = 1.0 / (10.0 * n);
  return prior.cwiseMax(floor);
}

DirichletResult pactran_dirichlet(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                  int num_classes, Eigen::VectorXd alpha_prior, int max_sweeps,
                                  double tolerance) {
  FeatureSet view;
  view.features = Eigen::MatrixXd::Zero(labels.size(), 1);
  view.labels = labels;
  view.num_classes = num_classes;
  const DatasetReport report = validate_dataset(view, &source);
  if (!report.probs_normalized) {
    throw ValidationError("pactran_dirichlet: source probability rows must sum to 1");
  }
  if (alpha_prior.size() == 0) alpha_prior = default_class_prior(labels, num_classes);
  validate_prior(alpha_prior, num_classes, "pactran_dirichlet");

  DirichletResult result;
  DirichletState& state = result.state;
  state.alpha_prior = alpha_prior;
  const Eigen::MatrixXd log_m = elementwise_log(source.probs);
  state.q = normalized_rows(source.probs);
  state.alpha_tilde = soft_counts(state.q, labels, num_classes);
  state.alpha_tilde.colwise() += alpha_prior;

  // Negated score objective at (q, alpha_tilde(q)); this is the true ELBO of
  // the factorized posterior once alpha_tilde absorbs the soft counts.
  auto elbo_now = [&]() {
    std::vector<double> column_terms(state.q.cols());
    for (Eigen::Index z = 0; z < state.q.cols(); ++z) {
      column_terms[z] = log_dirichlet_norm(state.alpha_tilde.col(z), state.clamped) -
                        log_dirichlet_norm(alpha_prior, state.clamped);
    }
    const double score =
        sum_sorted(column_terms) + assignment_divergence(state.q, log_m);
    return -score;
  };

  state.elbo_trace.push_back(elbo_now());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // q update given alpha_tilde, then alpha_tilde given q.
    Eigen::VectorXd column_digamma(state.q.cols());
    for (Eigen::Index z = 0; z < state.q.cols(); ++z) {
      column_digamma[z] = floored_digamma(state.alpha_tilde.col(z).sum(), state.clamped);
    }
    Eigen::MatrixXd logits(state.q.rows(), state.q.cols());
    for (Eigen::Index i = 0; i < state.q.rows(); ++i) {
      for (Eigen::Index z = 0; z < state.q.cols(); ++z) {
        logits(i, z) = log_m(i, z) == kNegInf
                           ? kNegInf
                           : log_m(i, z) +
                                 floored_digamma(state.alpha_tilde(labels[i], z), state.clamped) -
                                 column_digamma[z];
      }
    }
    softmax_rows_masked(logits);
    state.q = std::move(logits);
    state.alpha_tilde = soft_counts(state.q, labels, num_classes);
    state.alpha_tilde.colwise() += alpha_prior;

    const double elbo = elbo_now();
    const double gain = elbo - state.elbo_trace.back();
    state.elbo_trace.push_back(elbo);
    state.sweeps = sweep + 1;
    if (gain < tolerance) {
      state.converged = true;
      break;
    }
  }
  result.score = -state.elbo_trace.back();
  return result;
}

GammaResult pactran_gamma(const SourceDistribution& source, const Eigen::VectorXi& labels,
                          int num_classes, Eigen::VectorXd a_prior, int max_sweeps,
                          double tolerance) {
  FeatureSet view;
  view.features = Eigen::MatrixXd::Zero(labels.size(), 1);
  view.labels = labels;
  view.num_classes = num_classes;
  validate_dataset(view, &source);
  for (Eigen::Index i = 0; i < source.probs.rows(); ++i) {
    if (!(source.probs.row(i).sum() > 0.0)) {
      throw ValidationError("pactran_gamma: all-zero source row " + std::to_string(i));
    }
  }
  if (a_prior.size() == 0) a_prior = default_class_prior(labels, num_classes);
  validate_prior(a_prior, num_classes, "pactran_gamma");

  GammaResult result;
  GammaState& state = result.state;
  state.a_prior = a_prior;
  const Eigen::MatrixXd log_m = elementwise_log(source.probs);
  state.q = normalized_rows(source.probs);

  auto refresh_a_lambda = [&]() {
    state.a_tilde = soft_counts(state.q, labels, num_classes);
    state.a_tilde.colwise() += a_prior;
    // lambda_i = sum_{y,z} M_iz a_tilde_yz = M * column-sums(a_tilde).
    state.lambda_tilde = source.probs * state.a_tilde.colwise().sum().transpose();
  };
  refresh_a_lambda();

  auto elbo_now = [&]() {
    double shape_terms = 0.0;
    for (int y = 0; y < num_classes; ++y) {
      for (Eigen::Index z = 0; z < state.a_tilde.cols(); ++z) {
        shape_terms += floored_log_gamma(a_prior[y], state.clamped) -
                       floored_log_gamma(state.a_tilde(y, z), state.clamped);
      }
    }
    double lambda_terms = 0.0;
    for (Eigen::Index i = 0; i < state.lambda_tilde.size(); ++i) {
      lambda_terms += std::log(state.lambda_tilde[i]);
    }
    const double score =
        shape_terms + lambda_terms + assignment_divergence(state.q, log_m);
    return -score;
  };

  state.elbo_trace.push_back(elbo_now());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::MatrixXd logits(state.q.rows(), state.q.cols());
    for (Eigen::Index i = 0; i < state.q.rows(); ++i) {
      for (Eigen::Index z = 0; z < state.q.cols(); ++z) {
        logits(i, z) = log_m(i, z) == kNegInf
                           ? kNegInf
                           : log_m(i, z) +
                                 floored_digamma(state.a_tilde(labels[i], z), state.clamped);
      }
    }
    softmax_rows_masked(logits);
    state.q = std::move(logits);
    refresh_a_lambda();

    const double elbo = elbo_now();
    const double gain = elbo - state.elbo_trace.back();
    state.elbo_trace.push_back(elbo);
    state.sweeps = sweep + 1;
    if (gain < tolerance) {
      state.converged = true;
      break;
    }
  }
  result.score = -state.elbo_trace.back();
  return result;
}

double trace_hessian_ce(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                        const Eigen::MatrixXd& theta) {
  if (features.rows() != labels.size()) throw ValidationError("trace_hessian_ce: row mismatch");
  if (theta.rows() != features.cols() + 1) {
    throw ValidationError("trace_hessian_ce: theta shape mismatch");
  }
  const Eigen::MatrixXd probs = softmax_probabilities(features, theta);
  const Eigen::Index n = features.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double variance_sum = probs.row(i).sum() - probs.row(i).squaredNorm();
    total += (features.row(i).squaredNorm() + 1.0) * variance_sum;
  }
  return total / static_cast<double>(n);
}

GaussResult pactran_gaussian(const FeatureSet& data, double beta, double sigma0_sq,
                             const OptimizerConfig& config) {
  validate_dataset(data);
  if (!(beta > 0.0)) throw ValidationError("pactran_gaussian: beta must be positive");
  if (!(sigma0_sq > 0.0)) throw ValidationError("pactran_gaussian: sigma0_sq must be positive");

  GaussResult result;
  result.beta = beta;
  result.sigma0_sq = sigma0_sq;
  result.lambda = beta / sigma0_sq;

  const SoftmaxFit fit =
      fit_l2_softmax(data.features, data.labels, data.num_classes, beta, config);
  result.theta_star = fit.theta;
  result.converged = fit.converged;
  result.empirical_risk = fit.objective;
  result.trace_hessian = trace_hessian_ce(data.features, data.labels, fit.theta);

  const double k_deff =
      static_cast<double>(data.num_classes) * static_cast<double>(data.features.cols() + 1);
  result.variance_ratio = 1.0 + beta * result.trace_hessian / k_deff;
  result.flatness = k_deff * sigma0_sq / (2.0 * beta) * std::log(result.variance_ratio);
  result.score = result.empirical_risk + result.flatness;
  return result;
}

}  // namespace pactran
