#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

namespace pactran {

/// ln Gamma(x) for x > 0 (Lanczos approximation, relative error <= 1e-12).
/// Throws ValidationError for non-positive or non-finite x.
double log_gamma(double x);

/// Psi(x) = d/dx ln Gamma(x) for x > 0 (recurrence + asymptotic series,
/// absolute error <= 1e-10). Throws ValidationError for non-positive x.
double digamma(double x);

/// Order-independent sum: the result depends only on the multiset of values.
/// Used wherever a reduction must be exactly invariant under permutations.
double sum_sorted(std::span<const double> values);

/// log(sum_i exp(v_i)) with max-shift; exact for constant vectors and
/// permutation-invariant. Throws ValidationError on empty input.
double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Eigen::VectorXd& values);

/// softmax(v) computed through log_sum_exp; rows sum to 1 within 1e-12.
Eigen::VectorXd softmax_from_logits(const Eigen::VectorXd& logits);

/// Deterministic seed derivation (splitmix64 mixing), stable across platforms.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// FNV-1a hash of a byte string, for deriving seeds from checkpoint ids.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace pactran
