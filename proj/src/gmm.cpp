#include "pactran/gmm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "pactran/errors.hpp"
#include "pactran/rng.hpp"
#include "pactran/special.hpp"

namespace pactran {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

struct ComponentDensity {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

ComponentDensity prepare_density(const Eigen::MatrixXd& covariance) {
  ComponentDensity density;
  density.llt.compute(covariance);
  if (density.llt.info() != Eigen::Success) {
    throw NumericalError("gmm: covariance not positive definite after flooring");
  }
  const Eigen::MatrixXd l = density.llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) density.log_det += 2.0 * std::log(l(i, i));
  return density;
}

// N x V matrix of log(weight_v) + log N(x_i | mu_v, Sigma_v).
Eigen::MatrixXd weighted_log_densities(const GmmModel& model, const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index v = model.means.rows();
  const Eigen::Index d = data.cols();
  Eigen::MatrixXd out(n, v);
  for (Eigen::Index c = 0; c < v; ++c) {
    const ComponentDensity density = prepare_density(model.covariances[c]);
    const double log_weight =
        std::log(std::max(model.weights[c], std::numeric_limits<double>::min()));
    const Eigen::MatrixXd centered = data.rowwise() - model.means.row(c);
    // Solve L Y^T = centered^T; squared row norms give the quadratic forms.
    const Eigen::MatrixXd half =
        density.llt.matrixL().solve(centered.transpose());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double quad = half.col(i).squaredNorm();
      out(i, c) = log_weight - 0.5 * (d * kLog2Pi + density.log_det + quad);
    }
  }
  return out;
}

double fill_responsibilities(const Eigen::MatrixXd& weighted, Eigen::MatrixXd& resp) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < weighted.rows(); ++i) {
    const double lse = log_sum_exp(Eigen::VectorXd(weighted.row(i)));
    total += lse;
    for (Eigen::Index c = 0; c < weighted.cols(); ++c) {
      resp(i, c) = std::exp(weighted(i, c) - lse);
    }
  }
  return total;
}

void m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp, double floor,
            GmmModel& model) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const Eigen::Index v = resp.cols();
  for (Eigen::Index c = 0; c < v; ++c) {
    const double mass = resp.col(c).sum();
    model.weights[c] = mass / static_cast<double>(n);
    if (mass > 1e-12) {
      model.means.row(c) = (resp.col(c).transpose() * data) / mass;
      Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = data.row(i).transpose() - model.means.row(c).transpose();
        scatter.noalias() += resp(i, c) * diff * diff.transpose();
      }
      model.covariances[c] = scatter / mass;
    } else {
      // Component lost all mass; keep its mean, reset the covariance.
      model.covariances[c] = Eigen::MatrixXd::Zero(d, d);
    }
    model.covariances[c].diagonal().array() += floor;
  }
}

GmmModel fit_once(const Eigen::MatrixXd& data, int num_components, std::uint64_t seed,
                  const GmmConfig& config) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  std::mt19937_64 rng(seed);

  // k-means++-style seeding: first center uniform, the rest proportional to
  // squared distance from the nearest chosen center.
  Eigen::MatrixXd centers(num_components, d);
  centers.row(0) = data.row(static_cast<Eigen::Index>(uniform_index(rng, n)));
  Eigen::VectorXd nearest_sq =
      (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < num_components; ++c) {
    const double total = nearest_sq.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      double target = unit(rng) * total;
      pick = n - 1;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest_sq[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, n));
    }
    centers.row(c) = data.row(pick);
    nearest_sq =
        nearest_sq.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  // Hard assignment to the nearest center gives the first responsibilities.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, num_components);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_sq = (data.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < num_components; ++c) {
      const double sq = (data.row(i) - centers.row(c)).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = c;
      }
    }
    resp(i, best) = 1.0;
  }

  GmmModel model;
  model.weights.resize(num_components);
  model.means.resize(num_components, d);
  model.covariances.assign(num_components, Eigen::MatrixXd::Zero(d, d));
  m_step(data, resp, config.covariance_floor, model);

  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const Eigen::MatrixXd weighted = weighted_log_densities(model, data);
    const double ll = fill_responsibilities(weighted, resp);
    model.log_likelihood_trace.push_back(ll);
    model.log_likelihood = ll;
    model.iterations = iter + 1;
    if (ll - previous < config.tolerance && iter > 0) {
      model.converged = true;
      break;
    }
    previous = ll;
    m_step(data, resp, config.covariance_floor, model);
  }
  return model;
}

}  // namespace

GmmModel gmm_fit(const Eigen::MatrixXd& data, int num_components, std::uint64_t seed,
                 const GmmConfig& config) {
  if (num_components < 1) throw ValidationError("gmm_fit: need at least one component");
  if (data.rows() < num_components) {
    throw ValidationError("gmm_fit: fewer rows than mixture components");
  }
  if (!data.allFinite()) throw ValidationError("gmm_fit: non-finite input");

  GmmModel best;
  bool have_best = false;
  for (int r = 0; r < config.restarts; ++r) {
    GmmModel candidate = fit_once(data, num_components, mix_seed(seed, r), config);
    if (!have_best || candidate.log_likelihood > best.log_likelihood) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  return best;
}

Eigen::MatrixXd gmm_posterior(const GmmModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.means.cols()) throw ValidationError("gmm_posterior: dim mismatch");
  const Eigen::MatrixXd weighted = weighted_log_densities(model, data);
  Eigen::MatrixXd resp(weighted.rows(), weighted.cols());
  fill_responsibilities(weighted, resp);
  return resp;
}

}  // namespace pactran
