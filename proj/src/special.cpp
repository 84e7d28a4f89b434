#include "pactran/special.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pactran/errors.hpp"

namespace pactran {

namespace {

// Lanczos g = 7, n = 9 coefficient set; relative error ~ 1e-15 over x > 0.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

void require_positive_finite(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw ValidationError(std::string(fn) + ": argument must be positive and finite, got " +
                          std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive_finite(x, "log_gamma");
  // Series evaluated at z = x - 1; no reflection needed on x > 0.
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (int i = 1; i < 9; ++i) series += kLanczos[i] / (z + i);
  const double t = z + kLanczosG + 0.5;
  return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(series);
}

double digamma(double x) {
  require_positive_finite(x, "digamma");
  // Push the argument above 10 by Psi(x) = Psi(x+1) - 1/x, then use the
  // asymptotic series in 1/x^2 (Bernoulli terms through x^-14).
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2/2, B_4/4, ... as coefficients of x^-2k.
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0 -
                  inv2 * (691.0 / 32760.0 -
                  inv2 * (1.0 / 12.0)))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

double sum_sorted(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  return total;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw ValidationError("log_sum_exp: empty input");
  double max = -std::numeric_limits<double>::infinity();
  for (double v : values) max = std::max(max, v);
  if (!std::isfinite(max)) {
    // All -inf stays -inf; a +inf or NaN input propagates.
    return max;
  }
  std::vector<double> shifted;
  shifted.reserve(values.size());
  for (double v : values) shifted.push_back(std::exp(v - max));
  std::sort(shifted.begin(), shifted.end());
  double sum = 0.0;
  for (double e : shifted) sum += e;
  return max + std::log(sum);
}

double log_sum_exp(const Eigen::VectorXd& values) {
  return log_sum_exp(std::span<const double>(values.data(), static_cast<size_t>(values.size())));
}

Eigen::VectorXd softmax_from_logits(const Eigen::VectorXd& logits) {
  const double lse = log_sum_exp(logits);
  Eigen::VectorXd out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - lse);
  return out;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pactran
