#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "odtr/dataset.hpp"
#include "odtr/dtr.hpp"
#include "odtr/prob.hpp"
#include "odtr/rng.hpp"

namespace odtr {

enum class ScenarioForm { Linear, Squared, SinCos };

// Generating-model parameters for one simulation scenario; the latent outcome
// uses cutoffs -0.43 / 0.43 so the baseline category probabilities are 1/3.
struct ScenarioSpec {
  int id = 1;
  bool has_delta = false;
  double delta1 = 0.0, delta2 = 0.0;  // X21 mechanism (binary scenarios)
  std::array<double, 6> beta2{};      // beta_20 .. beta_25
  std::vector<double> zeta2;          // (zeta_21, zeta_22, zeta_23) or (zeta_21)
  ScenarioForm form = ScenarioForm::Linear;
  bool confounded = false;            // Sc.12 treatment mechanism
  int n_noise = 5;

  static ScenarioSpec get(int id);

  double latent_mean(double x11, int a1, double x21, int a2) const;
  double psi2(double x11, int a1, double x21) const;
  Simplex category_probs(double x11, int a1, double x21, int a2) const;
  // P(Y2 = 3 | x11, a1, x21, a2) under the generating model
  double prob_top(double x11, int a1, double x21, int a2) const;
  bool binary_covariates() const { return form == ScenarioForm::Linear; }
};

TwoStageDataset generate(const ScenarioSpec& spec, int n, SeededRng& rng);

// True stage-1 contrast psi_1(x11): exact pseudo-outcome distributions per
// (x11, a1) cell (X21 enumerated when binary, 10^6-draw Monte Carlo
// marginalization on a fixed grid when continuous), then a saturated
// ordered-probit projection with shared cutpoints; psi_1 is the fitted
// mean contrast over a1. Cached per scenario.
double true_psi1(const ScenarioSpec& spec, double x11);

// Weighted saturated ordered probit: cell distributions (rows) fitted with one
// free mean per cell and shared cutpoints (gamma_1 pinned at 0). Exposed for
// the oracle round-trip tests.
struct SaturatedProbitFit {
  Eigen::VectorXd means;
  std::vector<double> cut_interior;
};
SaturatedProbitFit fit_saturated_probit(const Eigen::MatrixXd& cell_probs,
                                        const Eigen::VectorXd& weights);

struct SimTruth {
  Eigen::VectorXd psi1, psi2;  // per test observation
  std::vector<int> act1, act2;
  std::vector<bool> tie1, tie2;  // |psi| <= 1e-10: both actions optimal
};

SimTruth compute_truth(const ScenarioSpec& spec, const TwoStageDataset& test);

// Query layout consumed by evaluate(): test rows first, then per-observation
// counterfactual stage-2 histories for the joint-regime value.
std::vector<Trajectory> build_eval_queries(const ScenarioSpec& spec,
                                           const TwoStageDataset& test);

struct StageMetrics {
  double bias = 0.0, mse = 0.0, coverage = 0.0, pot = 0.0;
  double value_true = 0.0, value_est = 0.0, value_obs = 0.0;
};

struct MetricsReport {
  StageMetrics stage1, stage2;
};

// Bias/MSE/coverage/POT per stage plus analytic value triples: the stage-2
// value keeps the observed a1 and applies the rule at stage 2 only; the
// stage-1 value applies the regime (d1, d2) jointly.
MetricsReport evaluate(const ScenarioSpec& spec, const DtrFitResult& fit,
                       const SimTruth& truth, const TwoStageDataset& test);

struct StudyConfig {
  std::vector<int> scenarios{1};
  std::vector<EstimatorKind> estimators{EstimatorKind::QLearning};
  int n_tr = 1000, n_te = 1000, replications = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  QLearningConfig ql;
  BigSamplerConfig bp;     // stage_model forced to BP
  BigSamplerConfig obart;  // stage_model forced to Obart
};

struct StudyRow {
  int scenario = 0;
  EstimatorKind estimator = EstimatorKind::QLearning;
  int stage = 1;
  double bias = 0.0, cover = 0.0, mse = 0.0, pot = 0.0;
  double value_true = 0.0, value_est = 0.0, value_obs = 0.0;
  double mc_se_bias = 0.0, mc_se_cover = 0.0, mc_se_mse = 0.0, mc_se_pot = 0.0,
         mc_se_value_est = 0.0;
  int replications = 0;
  int failures = 0;
};

std::string estimator_name(EstimatorKind kind);

// Replications fan out over rng stream ids and reduce in index order, so the
// thread budget never changes the numbers.
std::vector<StudyRow> run_study(const StudyConfig& cfg);

std::string study_csv(const std::vector<StudyRow>& rows);

}  // namespace odtr
