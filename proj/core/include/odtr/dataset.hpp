#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace odtr {

// One participant's two-stage record: baseline covariates, first treatment,
// intermediate covariates, second treatment, ordinal outcome in 1..K.
struct Trajectory {
  std::vector<double> x1;
  int a1 = 0;
  std::vector<double> x2;
  int a2 = 0;
  int y2 = 0;
};

struct TwoStageDataset {
  std::vector<Trajectory> trajectories;
  int n_categories = 0;
  std::vector<std::string> x1_names;
  std::vector<std::string> x2_names;

  std::size_t size() const { return trajectories.size(); }

  // Throws std::invalid_argument on dimension mismatches, treatments not in
  // {-1,+1}, labels outside 1..K, or fewer than 2 observed categories.
  void validate() const;
};

// Design rows for one stage's latent-mean model f(h, a) = beta.main + (zeta.inter) * a.
// The treatment enters only through the sign applied to the interaction block.
struct StageDesign {
  Eigen::MatrixXd main_block;   // n x p_main, includes leading intercept column
  Eigen::MatrixXd inter_block;  // n x p_inter, includes leading intercept column
  Eigen::VectorXi treatment;    // +-1
  Eigen::VectorXi labels;       // 1..K (may be overridden by pseudo-outcomes)
  std::vector<std::string> main_names;
  std::vector<std::string> inter_names;
};

// Stage-2 history features: [x1..., a1, x2...]; every covariate also enters
// the treatment-interaction block alongside the treatment main effect.
StageDesign build_stage2_design(const TwoStageDataset& data);

// Stage-1 history features: baseline covariates only.
StageDesign build_stage1_design(const TwoStageDataset& data,
                                const std::vector<int>& pseudo_outcomes);

// Single stage-2 history row (without the intercept handling exposed):
// returns the shared covariate vector [1, x1..., a1, x2...] used by both blocks.
Eigen::VectorXd stage2_row(const std::vector<double>& x1, int a1,
                           const std::vector<double>& x2);
Eigen::VectorXd stage1_row(const std::vector<double>& x1);

}  // namespace odtr
