#pragma once

#include <stdexcept>
#include <vector>

#include "odtr/rng.hpp"

namespace odtr {

// Standard normal CDF, |error| <= 1e-12 over the whole real line.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of normal_cdf on (0,1); throws std::domain_error outside.
double normal_quantile(double p);

// exp(x) / (1 + exp(x)), overflow-safe.
double expit(double x);

// Phi(hi) - Phi(lo), computed through the complementary CDF when both
// endpoints sit in the upper tail so the difference keeps relative accuracy.
double normal_interval_prob(double lo, double hi);

// Probability vector over K categories; entries in [0,1] summing to 1
// within 1e-12. Construction validates.
class Simplex {
 public:
  explicit Simplex(std::vector<double> probs);
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::size_t size() const { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

// Draw from N(mean, 1) restricted to (lo, hi]; +-infinity sentinels allowed.
// Inverse-CDF in the bulk, exponential-proposal rejection when the interval
// sits >= 3 sd into a tail. Throws std::invalid_argument if lo >= hi.
double sample_truncated_normal(SeededRng& rng, double mean, double lo, double hi);

// Category index in 1..K with probabilities given by the simplex.
int sample_multinomial(SeededRng& rng, const Simplex& probs);

// +1 with probability p, else -1.
int sample_signed_bernoulli(SeededRng& rng, double p);

// Unit standard normal draw (inverse-CDF; deterministic across platforms).
double sample_normal(SeededRng& rng);

// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
double sample_gamma(SeededRng& rng, double shape);

// Inverse-gamma with given shape and rate parameters.
double sample_inverse_gamma(SeededRng& rng, double shape, double rate);

}  // namespace odtr
