#include "pactran/subsample.hpp"

#include <algorithm>

#include "pactran/errors.hpp"
#include "pactran/rng.hpp"
#include "pactran/special.hpp"

namespace pactran {

std::vector<int> subsample_indices(const Eigen::VectorXi& labels, int num_classes,
                                   const SubsampleSpec& spec, int split_index) {
  if (labels.size() == 0) throw ValidationError("subsample_indices: empty dataset");
  if (num_classes < 1) throw ValidationError("subsample_indices: num_classes must be >= 1");
  if (spec.samples_per_class < 1) {
    throw ValidationError("subsample_indices: samples_per_class must be >= 1");
  }
  if (split_index < 0 || split_index >= spec.num_splits) {
    throw ValidationError("subsample_indices: split_index outside [0, num_splits)");
  }

  std::vector<std::vector<int>> by_class(num_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw ValidationError("subsample_indices: label out of range at row " + std::to_string(i));
    }
    by_class[y].push_back(static_cast<int>(i));
  }

  std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(split_index)));
  std::vector<int> chosen;
  std::vector<char> taken(labels.size(), 0);
  for (int y = 0; y < num_classes; ++y) {
    auto& pool = by_class[y];
    shuffle_in_place(pool, rng);
    const int quota = std::min<int>(spec.samples_per_class, static_cast<int>(pool.size()));
    for (int i = 0; i < quota; ++i) {
      chosen.push_back(pool[i]);
      taken[pool[i]] = 1;
    }
  }
  if (static_cast<int>(chosen.size()) < spec.min_total) {
    std::vector<int> remainder;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      if (!taken[i]) remainder.push_back(static_cast<int>(i));
    }
    shuffle_in_place(remainder, rng);
    const int need = std::min<int>(spec.min_total - static_cast<int>(chosen.size()),
                                   static_cast<int>(remainder.size()));
    chosen.insert(chosen.end(), remainder.begin(), remainder.begin() + need);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace pactran
