#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace pactran {

struct SubsampleSpec {
  int samples_per_class = 5;  // per-class quota (N/K in the protocol)
  int min_total = 20;         // topped up uniformly from the remainder
  int num_splits = 5;
  std::uint64_t seed = 0;
};

/// Stratified subsample indices for one split, ascending, deterministic in
/// (spec.seed, split_index) only: reusing them across checkpoints is what
/// keeps every metric on identical examples. Classes with fewer examples
/// than the quota contribute everything they have; if the total still falls
/// short of min_total the gap is filled uniformly from the remainder.
std::vector<int> subsample_indices(const Eigen::VectorXi& labels, int num_classes,
                                   const SubsampleSpec& spec, int split_index);

}  // namespace pactran
