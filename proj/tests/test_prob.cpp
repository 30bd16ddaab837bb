#include <doctest.h>

#include <cmath>

#include "odtr/prob.hpp"
#include "odtr/rng.hpp"

using namespace odtr;

namespace {
// independent oracle: the C library erfc, accurate to ~1 ulp
double phi_oracle(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}  // namespace

TEST_CASE("normal_cdf matches the erfc oracle to 1e-12") {
  for (double x = -8.0; x <= 8.0; x += 0.0625) {
    CHECK(std::abs(normal_cdf(x) - phi_oracle(x)) <= 1e-12);
  }
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  // frozen values
  CHECK(normal_cdf(0.43) == doctest::Approx(0.66640217942).epsilon(1e-10));
  CHECK(normal_cdf(-0.43) == doctest::Approx(0.33359782058).epsilon(1e-10));
}

TEST_CASE("normal_cdf is monotone and has correct limits") {
  double prev = 0.0;
  for (double x = -40.0; x <= 40.0; x += 0.25) {
    const double p = normal_cdf(x);
    CHECK(p >= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
  CHECK(normal_cdf(-40.0) == 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("normal_quantile inverts normal_cdf") {
  for (double x = -7.0; x <= 7.0; x += 0.125) {
    // rounding p = Phi(x) to the nearest double costs up to ~eps in p, which
    // maps back to an x-error of eps/phi(x); only material in the upper tail
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
    const double tol = 1e-9 * (1.0 + std::abs(x)) + 4e-16 / pdf;
    CHECK(std::abs(normal_quantile(normal_cdf(x)) - x) <= tol);
  }
  CHECK_THROWS_AS((void)normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS((void)normal_quantile(1.0), std::domain_error);
}

TEST_CASE("expit frozen value and symmetry") {
  CHECK(expit(0.7) == doctest::Approx(0.6681877721682).epsilon(1e-12));
  CHECK(expit(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(expit(5.0) + expit(-5.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expit(800.0) == 1.0);
  CHECK(expit(-800.0) == 0.0);
}

TEST_CASE("normal_interval_prob keeps relative accuracy in the upper tail") {
  const double oracle = 0.5 * (std::erfc(8.0 / std::sqrt(2.0)) - std::erfc(9.0 / std::sqrt(2.0)));
  const double got = normal_interval_prob(8.0, 9.0);
  CHECK(std::abs(got - oracle) / oracle <= 1e-6);
  CHECK(normal_interval_prob(-1.0, 1.0) ==
        doctest::Approx(phi_oracle(1.0) - phi_oracle(-1.0)).epsilon(1e-12));
}

TEST_CASE("Simplex validates") {
  CHECK_NOTHROW(Simplex({0.2, 0.3, 0.5}));
  CHECK_THROWS(Simplex({0.2, 0.3, 0.4}));
  CHECK_THROWS(Simplex({-0.1, 0.6, 0.5}));
}

TEST_CASE("truncated normal: half-normal mean and bracketing") {
  SeededRng rng(11, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_truncated_normal(rng, 0.0, 0.0,
                                             std::numeric_limits<double>::infinity());
    CHECK(z > 0.0);
    sum += z;
  }
  const double mean = sum / n;
  const double target = std::sqrt(2.0 / M_PI);  // 0.7978845608
  const double sd = std::sqrt(1.0 - target * target);
  CHECK(std::abs(mean - target) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("truncated normal: deep-tail draws stay in range") {
  SeededRng rng(12, 0);
  for (int i = 0; i < 5000; ++i) {
    const double z = sample_truncated_normal(rng, 0.0, 6.0, 7.0);
    CHECK(z > 6.0);
    CHECK(z <= 7.0);
  }
  CHECK_THROWS_AS((void)sample_truncated_normal(rng, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("multinomial sampling frequencies") {
  SeededRng rng(13, 0);
  const Simplex p({0.5, 0.2, 0.3});
  int counts[3] = {0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int k = sample_multinomial(rng, p);
    REQUIRE(k >= 1);
    REQUIRE(k <= 3);
    counts[k - 1]++;
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(counts[k] / static_cast<double>(n) - p[static_cast<std::size_t>(k)]) < 0.01);
  }
}

TEST_CASE("gamma and inverse-gamma moments") {
  SeededRng rng(14, 0);
  const double shape = 3.5;
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = sample_gamma(rng, shape);
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(shape).epsilon(0.02));
  CHECK(var == doctest::Approx(shape).epsilon(0.05));

  // IG(shape, rate): mean = rate / (shape - 1)
  double isum = 0.0;
  for (int i = 0; i < n; ++i) isum += sample_inverse_gamma(rng, 4.0, 6.0);
  CHECK(isum / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("signed bernoulli frequency") {
  SeededRng rng(15, 0);
  int pos = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int s = sample_signed_bernoulli(rng, 0.3);
    REQUIRE((s == 1 || s == -1));
    if (s == 1) ++pos;
  }
  CHECK(pos / static_cast<double>(n) == doctest::Approx(0.3).epsilon(0.03));
}
