#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "odtr/dataset.hpp"
#include "odtr/obart.hpp"
#include "odtr/ordered_probit.hpp"
#include "odtr/rng.hpp"

namespace odtr {

struct ActionChoice {
  int action = 1;
  bool tie = false;
};

// +1 if psi > 0, -1 if psi < 0; tie when |psi| <= tie_tol (both actions
// optimal). Estimated rules use tie_tol = 0; true rules use 1e-10.
ActionChoice optimal_action(double psi, double tie_tol = 0.0);

// Linear-interpolation (type-7) sample quantile.
double quantile_type7(std::vector<double> values, double p);

// Equal-tailed interval from posterior draws.
std::pair<double, double> credible_interval(std::vector<double> draws, double level);

enum class EstimatorKind { QLearning, BmlBP, BmlObart };

// Per-observation psi summaries for one stage; draws is draws x observations
// and is empty for frequentist fits. For BML fits the stage-2 matrix holds
// every retained post-burnin draw; the stage-1 matrix holds the R^bml
// imputation draws.
struct StagePsi {
  Eigen::VectorXd point;
  Eigen::VectorXd lo, hi;
  Eigen::MatrixXd draws;
};

struct DtrFitResult {
  EstimatorKind kind = EstimatorKind::QLearning;
  StagePsi psi1_train, psi2_train;
  StagePsi psi1_query, psi2_query;  // at caller-supplied query trajectories
  std::vector<int> action1_train, action2_train;
  std::vector<int> action1_query, action2_query;
  std::optional<LinearProbitModel> stage2_model, stage1_model;  // Q-learning point fits
  std::vector<ProbitDraw> stage2_draws, stage1_draws;           // BML-BP posteriors
  double stage1_acceptance = 1.0, stage2_acceptance = 1.0;
  int repetitions_used = 0;  // R^ql or R^bml actually run
  int bootstrap_m = 0;
  double bootstrap_p_hat = 0.0;
  int bootstrap_failures = 0;
};

struct BootstrapConfig {
  double alpha_tune = 0.05;
  int B = 1000;
  bool fixed_m = false;  // skip the p-hat pilot and use m_override
  int m_override = 0;
  double level = 0.95;
};

struct QLearningConfig {
  int r_ql = 50;
  bool do_bootstrap = false;
  BootstrapConfig bootstrap;
};

// Algorithm 1: stage-2 ordered-probit MLE, multinomial pseudo-outcomes under
// the estimated optimal stage-2 action, R^ql averaged stage-1 MLEs. Intervals
// (when requested) come from the m-out-of-n bootstrap over full refits.
DtrFitResult qlearning_fit(const TwoStageDataset& data,
                           const std::vector<Trajectory>& queries,
                           const QLearningConfig& cfg, SeededRng& rng);

enum class StageModelKind { BP, Obart };

struct BigSamplerConfig {
  StageModelKind stage_model = StageModelKind::BP;
  int r_bml = 1000;
  int s2_draws = 4000, s2_burnin = 2000;
  int s1_draws = 0;  // short per-imputation chain; 0 -> 500 (BP) / 600 (OBART)
  ProbitGibbsConfig probit;
  ObartHyper obart;
  double level = 0.95;
};

// Algorithm 2 (backward induction Gibbs): stage-2 posterior fitted once; each
// of R^bml stage-2 draws imputes its own stage-1 dataset and contributes one
// stage-1 draw (the last draw of a short chain).
DtrFitResult big_sampler_fit(const TwoStageDataset& data,
                             const std::vector<Trajectory>& queries,
                             const BigSamplerConfig& cfg, SeededRng& rng);

// m = ceil(n^((1 + alpha*(1 - p_hat)) / (1 + alpha))).
int moon_resample_size(int n, double alpha_tune, double p_hat);

// psi estimates at a fixed list of evaluation points (both stages).
struct PsiPair {
  Eigen::VectorXd psi1, psi2;
};
using PsiEstimator = std::function<PsiPair(const TwoStageDataset&, SeededRng&)>;

struct MoonIntervals {
  Eigen::VectorXd lo1, hi1, lo2, hi2;
  int m = 0;
  double p_hat = 0.0;
  int failures = 0;
};

// m-out-of-n bootstrap: pilot run (B/5 replicates, m = n) estimates p_hat as
// the fraction of the first n_train_points whose stage-2 psi percentile
// interval contains 0; then B size-m replicates give reflected percentile
// intervals recentred at `center` and scaled by sqrt(m/n). Estimator failures
// are tolerated up to 5% of replicates.
MoonIntervals m_out_of_n_bootstrap(const TwoStageDataset& data, const PsiEstimator& est,
                                   const PsiPair& center, Eigen::Index n_train_points,
                                   const BootstrapConfig& cfg, SeededRng& rng);

}  // namespace odtr
