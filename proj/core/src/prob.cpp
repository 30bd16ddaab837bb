#include "odtr/prob.hpp"

#include <cmath>
#include <limits>

namespace odtr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}  // namespace

double normal_cdf(double x) {
  // erfc is accurate to a few ulps; absolute error well under 1e-12
  return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double normal_interval_prob(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo > 0.0) {
    // both in the upper tail: difference of complementary CDFs
    return 0.5 * (std::erfc(lo / kSqrt2) - std::erfc(hi / kSqrt2));
  }
  if (hi < 0.0) {
    return 0.5 * (std::erfc(-hi / kSqrt2) - std::erfc(-lo / kSqrt2));
  }
  return normal_cdf(hi) - normal_cdf(lo);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  }
  // Acklam's rational approximation followed by one Halley step against the
  // erfc-based CDF; the refinement brings the result to full double accuracy.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement
  const double e = normal_cdf(x) - p;
  const double u = e / normal_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

Simplex::Simplex(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("Simplex: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("Simplex: entry outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("Simplex: entries do not sum to 1");
  }
}

double sample_normal(SeededRng& rng) { return normal_quantile(rng.uniform01()); }

namespace {

// Robert's one-sided rejection sampler for a standard normal restricted to
// [lo, inf) with lo >= 0; exponential proposal tilted at the optimal rate.
double sample_lower_tail(SeededRng& rng, double lo, double hi) {
  const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    const double draw = lo - std::log(rng.uniform01()) / rate;
    if (draw > hi) continue;
    const double diff = draw - rate;
    if (std::log(rng.uniform01()) <= -0.5 * diff * diff) return draw;
  }
}

}  // namespace

double sample_truncated_normal(SeededRng& rng, double mean, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("sample_truncated_normal: lo >= hi");
  }
  const double a = lo - mean;
  const double b = hi - mean;
  double z;
  if (a >= 3.0) {
    z = sample_lower_tail(rng, a, b);
  } else if (b <= -3.0) {
    z = -sample_lower_tail(rng, -b, -a);
  } else {
    const double pa = (a == -kInf) ? 0.0 : normal_cdf(a);
    const double pb = (b == kInf) ? 1.0 : normal_cdf(b);
    const double u = pa + (pb - pa) * rng.uniform01();
    // clamp away from the endpoints so the quantile stays finite
    const double eps = 1e-300;
    z = normal_quantile(std::min(std::max(u, eps), 1.0 - 1e-16));
  }
  // keep the draw strictly inside (a, b]
  if (z <= a) z = std::nextafter(a, kInf);
  if (z > b) z = b;
  return mean + z;
}

int sample_multinomial(SeededRng& rng, const Simplex& probs) {
  const double u = rng.uniform01();
  double cum = 0.0;
  const std::size_t K = probs.size();
  for (std::size_t k = 0; k < K; ++k) {
    cum += probs[k];
    if (u <= cum) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(K);
}

int sample_signed_bernoulli(SeededRng& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sample_signed_bernoulli: p outside [0,1]");
  }
  return rng.uniform01() <= p ? 1 : -1;
}

double sample_gamma(SeededRng& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape <= 0");
  if (shape < 1.0) {
    // boost to shape+1 and scale back
    const double u = rng.uniform01();
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = sample_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double sample_inverse_gamma(SeededRng& rng, double shape, double rate) {
  return rate / sample_gamma(rng, shape);
}

}  // namespace odtr
