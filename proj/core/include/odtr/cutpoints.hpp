#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "odtr/rng.hpp"

namespace odtr {

// Ordered thresholds mapping the latent utility line to K categories.
// gamma(0) = -inf and gamma(K) = +inf are implicit sentinels; the stored
// interior values gamma(1..K-1) are strictly increasing. When pinned,
// gamma(1) is fixed at 0 (the Bayesian identification convention).
class CutPoints {
 public:
  CutPoints() = default;
  CutPoints(std::vector<double> interior, bool pin_first);

  int n_categories() const { return static_cast<int>(interior_.size()) + 1; }
  bool pinned() const { return pin_first_; }

  // k in 0..K; sentinel-aware accessor
  double gamma(int k) const {
    if (k <= 0) return -std::numeric_limits<double>::infinity();
    if (k >= n_categories()) return std::numeric_limits<double>::infinity();
    return interior_[static_cast<std::size_t>(k - 1)];
  }
  const std::vector<double>& interior() const { return interior_; }
  void set_interior(int k, double value);  // k in 1..K-1; preserves pin

  bool strictly_increasing() const;

 private:
  std::vector<double> interior_;
  bool pin_first_ = false;
};

// Sum over observations of log(Phi(gamma_y - f) - Phi(gamma_{y-1} - f));
// -inf when any term is nonpositive (impossible configuration).
double cutpoint_log_posterior(const CutPoints& cut, const Eigen::VectorXd& fits,
                              const Eigen::VectorXi& labels);

// One blocked Metropolis update of the free interior cutpoints (k = 2..K-1)
// given latent-mean fits. Each free cutpoint is proposed from a normal
// centered at its current value, truncated between the already-proposed lower
// neighbor and the previous-iteration upper neighbor; the whole block is
// accepted together with the truncated-normal proposal-density correction.
// Requires a pinned first cutpoint. Returns true on acceptance (a no-op block,
// e.g. K = 2, counts as accepted).
bool mh_cutpoint_block(SeededRng& rng, CutPoints& cut, const Eigen::VectorXd& fits,
                       const Eigen::VectorXi& labels, double sigma_mh);

}  // namespace odtr
