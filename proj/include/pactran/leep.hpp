#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pactran/dataset.hpp"

namespace pactran {

/// Empirical conditional p(y|z): joint counts weighted by the source
/// probabilities, column-normalized. Columns with zero mass are filled with
/// the uniform 1/K and reported through empty_columns.
Eigen::MatrixXd leep_conditional(const SourceDistribution& source, const Eigen::VectorXi& labels,
                                 int num_classes, std::vector<int>* empty_columns = nullptr);

struct LeepResult {
  double score = 0.0;  // mean log-likelihood of the transferred predictor, <= 0
  bool degenerate = false;
  std::vector<int> empty_columns;
};

/// Log-expected empirical prediction: (1/N) sum_i log sum_z p(y_i|z) M(x_i)_z.
/// Requires normalized source rows. Exactly invariant under permuting source
/// classes.
LeepResult leep_score(const SourceDistribution& source, const Eigen::VectorXi& labels,
                      int num_classes);

/// Negative conditional entropy -H(Y|Z) of the hard source assignment
/// z_i = argmax_z M(x_i)_z (ties to the lowest index); 0 log 0 = 0.
double nce_score(const SourceDistribution& source, const Eigen::VectorXi& labels, int num_classes);

struct NleepResult {
  double score = 0.0;
  int reduced_dim = 0;
  double gmm_log_likelihood = 0.0;
  bool pca_degenerate = false;
};

/// LEEP with the source head replaced by GMM posteriors over PCA-reduced
/// features: PCA at energy_fraction, a num_components mixture (default K),
/// posteriors as the source distribution.
NleepResult nleep_score(const FeatureSet& data, double energy_fraction = 0.8,
                        int num_components = -1, std::uint64_t seed = 0);

}  // namespace pactran
