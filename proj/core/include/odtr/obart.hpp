#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <vector>

#include "odtr/bart.hpp"
#include "odtr/cutpoints.hpp"
#include "odtr/ordered_probit.hpp"
#include "odtr/rng.hpp"

namespace odtr {

struct ObartHyper {
  BartHyper bart;           // sigma_mu = 0 resolves to 3/(b*sqrt(M))
  double sigma_mh = 0.0;    // 0 -> 0.5/K
  double mu0 = std::numeric_limits<double>::quiet_NaN();  // NaN -> quantile(1 - p1_hat)
  bool adapt_burnin = true;  // sigma_mh tuning during burn-in only
  bool store_forests = false;
};

// One retained posterior state: cached latent means (mu0 + forest) at the
// training rows and at the registered query rows, plus that iteration's
// cutpoints. Full forests are kept only on request.
struct ObartDraw {
  Eigen::VectorXd train_fits;
  Eigen::VectorXd query_fits;
  CutPoints cut;
  std::shared_ptr<const Forest> forest;
};

struct ObartPosterior {
  std::vector<ObartDraw> draws;
  double acceptance_rate = 1.0;
  int burn_in = 0;
  double mu0 = 0.0;
};

// Algorithm: alternate (a) one forest sweep against the latent utilities with
// variance fixed at 1, (b) the blocked cutpoint Metropolis update, (c)
// truncated latent redraws; gamma_1 pinned at 0. n_draws counts total
// iterations; draws after burn_in are retained. query_rows may be empty.
ObartPosterior obart_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& labels, int K,
                         const Eigen::MatrixXd& query_rows, int n_draws, int burn_in,
                         SeededRng& rng, const ObartHyper& hyper = {});

// Per-draw category simplex at a training / query row.
std::vector<Simplex> posterior_category_probs_train(const ObartPosterior& post,
                                                    Eigen::Index row);
std::vector<Simplex> posterior_category_probs_query(const ObartPosterior& post,
                                                    Eigen::Index row);

}  // namespace odtr
