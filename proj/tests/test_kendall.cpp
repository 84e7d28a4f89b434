#include <random>
#include <vector>

#include <doctest.h>

#include "pactran/errors.hpp"
#include "pactran/kendall.hpp"

using namespace pactran;

namespace {

// Direct O(C^2) definition: tau-a with sign() pair contributions.
double kendall_direct(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t c = a.size();
  long long net = 0;
  for (size_t i = 0; i < c; ++i) {
    for (size_t j = i + 1; j < c; ++j) {
      const double da = a[j] - a[i];
      const double db = b[j] - b[i];
      const int sa = da > 0 ? 1 : (da < 0 ? -1 : 0);
      const int sb = db > 0 ? 1 : (db < 0 ? -1 : 0);
      net += sa * sb;
    }
  }
  const double pairs = 0.5 * static_cast<double>(c) * static_cast<double>(c - 1);
  return static_cast<double>(net) / pairs;
}

}  // namespace

TEST_CASE("kendall_tau hand values") {
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) == 1.0);
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{30, 20, 10}) == -1.0);
  CHECK(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 4, 3}) ==
        doctest::Approx(4.0 / 6.0));
  // A fully tied side scores zero under tau-a.
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}) == 0.0);
}

TEST_CASE("kendall_tau rejects degenerate input") {
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1.0}, std::vector<double>{2.0}),
                  ValidationError);
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                  ValidationError);
}

TEST_CASE("kendall_tau equals the direct pair count bit for bit") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 1000; ++t) {
    const int c = 2 + static_cast<int>(rng() % 40);
    std::vector<double> a(c), b(c);
    // Coarse integer grids force plenty of ties in both vectors.
    const int levels = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < c; ++i) {
      a[i] = static_cast<double>(rng() % levels);
      b[i] = static_cast<double>(rng() % levels);
    }
    CHECK(kendall_tau(a, b) == kendall_direct(a, b));
  }
}

TEST_CASE("kendall_tau equals the direct count on continuous data") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> uniform(-5.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const int c = 2 + static_cast<int>(rng() % 30);
    std::vector<double> a(c), b(c);
    for (int i = 0; i < c; ++i) {
      a[i] = uniform(rng);
      b[i] = uniform(rng);
    }
    CHECK(kendall_tau(a, b) == kendall_direct(a, b));
  }
}
