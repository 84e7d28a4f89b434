#include "pactran/kendall.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pactran/errors.hpp"

namespace pactran {

namespace {

// Counts strict inversions (left > right) by merge sort.
std::uint64_t count_inversions(std::vector<double>& values, std::vector<double>& scratch,
                               size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  std::uint64_t count = count_inversions(values, scratch, lo, mid) +
                        count_inversions(values, scratch, mid, hi);
  size_t left = lo, right = mid, out = lo;
  while (left < mid && right < hi) {
    if (values[right] < values[left]) {
      count += mid - left;  // every remaining left element exceeds values[right]
      scratch[out++] = values[right++];
    } else {
      scratch[out++] = values[left++];
    }
  }
  while (left < mid) scratch[out++] = values[left++];
  while (right < hi) scratch[out++] = values[right++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, values.begin() + lo);
  return count;
}

std::uint64_t tied_pairs(std::uint64_t run) { return run * (run - 1) / 2; }

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("kendall_tau: length mismatch");
  const size_t c = a.size();
  if (c < 2) throw ValidationError("kendall_tau: need at least two entries");

  std::vector<size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    return b[i] < b[j];
  });

  // Pairs tied in a, and tied in both, from runs of the (a, b)-sorted order.
  std::uint64_t ties_a = 0, ties_both = 0;
  for (size_t i = 0; i < c;) {
    size_t j = i;
    while (j < c && a[order[j]] == a[order[i]]) ++j;
    ties_a += tied_pairs(j - i);
    for (size_t k = i; k < j;) {
      size_t m = k;
      while (m < j && b[order[m]] == b[order[k]]) ++m;
      ties_both += tied_pairs(m - k);
      k = m;
    }
    i = j;
  }

  std::uint64_t ties_b = 0;
  {
    std::vector<double> sorted_b(b.begin(), b.end());
    std::sort(sorted_b.begin(), sorted_b.end());
    for (size_t i = 0; i < c;) {
      size_t j = i;
      while (j < c && sorted_b[j] == sorted_b[i]) ++j;
      ties_b += tied_pairs(j - i);
      i = j;
    }
  }

  // With ties in a broken by b, inversions of the permuted b sequence are
  // exactly the discordant pairs.
  std::vector<double> permuted(c), scratch(c);
  for (size_t i = 0; i < c; ++i) permuted[i] = b[order[i]];
  const std::uint64_t discordant = count_inversions(permuted, scratch, 0, c);

  const std::uint64_t all_pairs = tied_pairs(c);
  const std::uint64_t untied = all_pairs - ties_a - ties_b + ties_both;
  const std::int64_t net =
      static_cast<std::int64_t>(untied) - 2 * static_cast<std::int64_t>(discordant);
  return static_cast<double>(net) / static_cast<double>(all_pairs);
}

}  // namespace pactran
