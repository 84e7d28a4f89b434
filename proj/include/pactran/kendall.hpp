#pragma once

#include <span>

namespace pactran {

/// Kendall rank correlation tau-a: (concordant - discordant) / (C(C-1)/2),
/// with tied pairs (in either vector) contributing zero. O(C log C) via
/// sort + merge inversion counting. Throws ValidationError if the vectors
/// differ in length or have fewer than two entries.
double kendall_tau(std::span<const double> a, std::span<const double> b);

}  // namespace pactran
