#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pactran {

/// Unbiased draw from [0, n) via rejection; stable given the engine stream.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Fisher-Yates shuffle driven by uniform_index (kept in-repo so shuffles are
/// a pure function of the seed, independent of standard-library internals).
template <typename T>
void shuffle_in_place(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::uint64_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[uniform_index(rng, i)]);
  }
}

}  // namespace pactran
