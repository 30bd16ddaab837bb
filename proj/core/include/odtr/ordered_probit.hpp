#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "odtr/cutpoints.hpp"
#include "odtr/dataset.hpp"
#include "odtr/prob.hpp"
#include "odtr/rng.hpp"

namespace odtr {

// Linear-latent ordered probit: f(h, a) = beta.h_main + (zeta.h_inter) * a,
// P(Y <= k) = Phi(gamma_k - f).
struct LinearProbitModel {
  Eigen::VectorXd beta;
  Eigen::VectorXd zeta;
  CutPoints cut;

  double latent_mean(const Eigen::VectorXd& h_main, const Eigen::VectorXd& h_inter,
                     int a) const;
  Simplex category_probs(const Eigen::VectorXd& h_main, const Eigen::VectorXd& h_inter,
                         int a) const;
  // f(h,+1) - f(h,-1) = 2 * zeta . h_inter
  double psi(const Eigen::VectorXd& h_inter) const { return 2.0 * zeta.dot(h_inter); }
};

Simplex category_probs_from_latent(double latent_mean, const CutPoints& cut);

struct ProbitMleResult {
  LinearProbitModel model;
  Eigen::MatrixXd covariance;      // observed-information, over (coefs, free cutpoints)
  double log_likelihood = 0.0;
  int iterations = 0;
  bool separation_warning = false;  // some |coefficient| > 20
  // categories merged into their lower neighbor because they were unobserved;
  // empty in the common case
  std::vector<int> collapsed_categories;
};

// Maximum likelihood with the classical parameterization: no main-block
// intercept, all interior cutpoints free. The returned model carries a zero
// intercept so category_probs/psi work uniformly across conventions.
// Throws on rank deficiency or non-convergence. Optional warm start.
ProbitMleResult fit_mle(const StageDesign& design, int n_categories,
                        const LinearProbitModel* warm_start = nullptr);

struct ProbitDraw {
  Eigen::VectorXd beta;
  Eigen::VectorXd zeta;
  CutPoints cut;
};

struct ProbitPosterior {
  std::vector<ProbitDraw> draws;
  int burn_in = 0;
  double acceptance_rate = 1.0;  // cutpoint MH
};

struct ProbitGibbsConfig {
  double coef_prior_sd = 10.0;
  double sigma_mh = 0.0;         // 0 -> default 0.5/K
  double divergence_guard = 20.0;
  bool adapt_sigma_mh = true;    // burn-in only
};

// Latent-utility data augmentation with conjugate coefficient updates and the
// blocked Metropolis cutpoint kernel; gamma_1 pinned at 0, intercept included.
ProbitPosterior gibbs_fit(const StageDesign& design, int n_categories, int n_draws,
                          int burn_in, SeededRng& rng,
                          const ProbitGibbsConfig& config = {});

}  // namespace odtr
