#include "odtr/cutpoints.hpp"

#include <cmath>
#include <stdexcept>

#include "odtr/prob.hpp"

namespace odtr {

CutPoints::CutPoints(std::vector<double> interior, bool pin_first)
    : interior_(std::move(interior)), pin_first_(pin_first) {
  if (pin_first_) {
    if (interior_.empty() || interior_.front() != 0.0) {
      throw std::invalid_argument("CutPoints: pinned first cutpoint must be 0");
    }
  }
  if (!strictly_increasing()) {
    throw std::invalid_argument("CutPoints: interior values must be strictly increasing");
  }
}

void CutPoints::set_interior(int k, double value) {
  if (k < 1 || k > n_categories() - 1) {
    throw std::out_of_range("CutPoints::set_interior");
  }
  if (pin_first_ && k == 1) {
    throw std::invalid_argument("CutPoints: cannot move the pinned cutpoint");
  }
  interior_[static_cast<std::size_t>(k - 1)] = value;
}

bool CutPoints::strictly_increasing() const {
  for (std::size_t i = 1; i < interior_.size(); ++i) {
    if (!(interior_[i - 1] < interior_[i])) return false;
  }
  return true;
}

double cutpoint_log_posterior(const CutPoints& cut, const Eigen::VectorXd& fits,
                              const Eigen::VectorXi& labels) {
  if (fits.size() != labels.size()) {
    throw std::invalid_argument("cutpoint_log_posterior: fits/labels length mismatch");
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!cut.strictly_increasing()) return neg_inf;
  double total = 0.0;
  for (Eigen::Index i = 0; i < fits.size(); ++i) {
    const int y = labels(i);
    const double hi = cut.gamma(y) - fits(i);
    const double lo = cut.gamma(y - 1) - fits(i);
    const double p = normal_interval_prob(lo, hi);
    if (!(p > 0.0)) return neg_inf;
    total += std::log(p);
  }
  return total;
}

bool mh_cutpoint_block(SeededRng& rng, CutPoints& cut, const Eigen::VectorXd& fits,
                       const Eigen::VectorXi& labels, double sigma_mh) {
  if (!cut.pinned()) {
    throw std::invalid_argument("mh_cutpoint_block: requires a pinned first cutpoint");
  }
  const int K = cut.n_categories();
  if (K <= 2) return true;  // no free cutpoints

  CutPoints prop = cut;
  for (int k = 2; k <= K - 1; ++k) {
    const double cur = cut.gamma(k);
    const double lower = prop.gamma(k - 1);       // already-proposed neighbor
    const double upper = cut.gamma(k + 1);        // previous-iteration neighbor
    const double z = sample_truncated_normal(rng, 0.0, (lower - cur) / sigma_mh,
                                             (upper - cur) / sigma_mh);
    prop.set_interior(k, cur + sigma_mh * z);
  }
  // truncated-normal normalization: forward over reverse (needs the full
  // proposed vector, hence the second pass)
  double log_correction = 0.0;
  for (int k = 2; k <= K - 1; ++k) {
    const double cur = cut.gamma(k);
    const double draw = prop.gamma(k);
    const double num = normal_interval_prob((prop.gamma(k - 1) - cur) / sigma_mh,
                                            (cut.gamma(k + 1) - cur) / sigma_mh);
    const double den = normal_interval_prob((cut.gamma(k - 1) - draw) / sigma_mh,
                                            (prop.gamma(k + 1) - draw) / sigma_mh);
    log_correction += std::log(num) - std::log(den);
  }
  const double log_ratio = cutpoint_log_posterior(prop, fits, labels) -
                           cutpoint_log_posterior(cut, fits, labels) + log_correction;
  if (std::log(rng.uniform01()) <= log_ratio) {
    cut = prop;
    return true;
  }
  return false;
}

}  // namespace odtr
