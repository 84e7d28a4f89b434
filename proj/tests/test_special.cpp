#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "pactran/errors.hpp"
#include "pactran/special.hpp"

using namespace pactran;

TEST_CASE("log_gamma matches reference values") {
  // lgamma(0.5) = log sqrt(pi), lgamma(1) = lgamma(2) = 0, lgamma(6) = log 120.
  CHECK(log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-14));
  CHECK(std::abs(log_gamma(1.0)) < 1e-14);
  CHECK(std::abs(log_gamma(2.0)) < 1e-14);
  CHECK(log_gamma(6.0) == doctest::Approx(std::log(120.0)).epsilon(1e-14));
  CHECK(log_gamma(10.5) == doctest::Approx(std::lgamma(10.5)).epsilon(1e-13));
}

TEST_CASE("log_gamma agrees with std::lgamma across the positive axis") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uniform(1e-3, 50.0);
  for (int t = 0; t < 1000; ++t) {
    const double x = uniform(rng);
    const double mine = log_gamma(x);
    const double ref = std::lgamma(x);
    CHECK(std::abs(mine - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("log_gamma satisfies the recurrence lgamma(x+1) = lgamma(x) + log x") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uniform(0.05, 30.0);
  for (int t = 0; t < 500; ++t) {
    const double x = uniform(rng);
    CHECK(log_gamma(x + 1.0) ==
          doctest::Approx(log_gamma(x) + std::log(x)).epsilon(1e-11));
  }
}

TEST_CASE("digamma matches reference values") {
  constexpr double kEuler = 0.5772156649015329;
  CHECK(digamma(1.0) == doctest::Approx(-kEuler).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-13));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEuler).epsilon(1e-13));
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uniform(0.05, 40.0);
  for (int t = 0; t < 500; ++t) {
    const double x = uniform(rng);
    CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-11));
  }
}

TEST_CASE("digamma is the derivative of log_gamma") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> uniform(0.5, 20.0);
  for (int t = 0; t < 200; ++t) {
    const double x = uniform(rng);
    const double h = 1e-6 * std::max(1.0, x);
    const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
    CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("sum_sorted is exactly permutation invariant") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uniform(-1e6, 1e6);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> values(37);
    for (double& v : values) v = uniform(rng);
    const double base = sum_sorted(values);
    for (int s = 0; s < 10; ++s) {
      std::shuffle(values.begin(), values.end(), rng);
      CHECK(sum_sorted(values) == base);
    }
  }
}

TEST_CASE("log_sum_exp basics") {
  std::vector<double> two = {std::log(0.25), std::log(0.75)};
  CHECK(log_sum_exp(two) == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> shifted = {1000.0, 1000.0};
  CHECK(log_sum_exp(shifted) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> all_inf = {neg_inf, neg_inf};
  CHECK(log_sum_exp(all_inf) == neg_inf);

  std::vector<double> empty;
  CHECK_THROWS_AS(log_sum_exp(empty), ValidationError);
}

TEST_CASE("log_sum_exp is exactly permutation invariant") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> uniform(-30.0, 30.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> values(12);
    for (double& v : values) v = uniform(rng);
    const double base = log_sum_exp(values);
    for (int s = 0; s < 8; ++s) {
      std::shuffle(values.begin(), values.end(), rng);
      CHECK(log_sum_exp(values) == base);
    }
  }
}

TEST_CASE("softmax_from_logits normalizes and matches ratios") {
  Eigen::VectorXd logits(3);
  logits << 1.0, 2.0, 3.0;
  const Eigen::VectorXd p = softmax_from_logits(logits);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[1] / p[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(p[2] / p[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("mix_seed separates streams and is stable") {
  CHECK(mix_seed(0, 0) != mix_seed(0, 1));
  CHECK(mix_seed(0, 1) != mix_seed(1, 0));
  CHECK(mix_seed(3, 4, 5) != mix_seed(3, 5, 4));
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
  CHECK(fnv1a("ckpt00") != fnv1a("ckpt01"));
  CHECK(fnv1a("") == 14695981039346656037ull);
}
