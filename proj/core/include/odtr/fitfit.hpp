#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace odtr {

// Growth controls for the summary CART (rpart-style defaults).
struct CartControl {
  int min_split = 50;    // smallest node eligible for a split
  int min_bucket = 17;   // smallest allowed leaf
  double complexity = 0.01;  // split accepted iff SSE drop >= complexity * root SSE
  int max_depth = 10;
};

struct SummaryNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;  // internal: left child takes feature < threshold
  int left = -1, right = -1;
  int n = 0;
  double mean_psi = 0.0;
  int action = 1;  // sign(mean_psi), -1 when mean_psi <= 0 at a leaf
};

struct SummaryTree {
  std::vector<SummaryNode> nodes;  // nodes[0] is the root
  std::vector<std::string> feature_names;
  double r2 = 0.0;
};

// Greedy variance-reduction CART on posterior-mean psi targets. Ties in SSE
// reduction break toward the lowest feature index, then the lowest threshold.
SummaryTree fit_summary_tree(const Eigen::MatrixXd& features,
                             const std::vector<std::string>& feature_names,
                             const Eigen::VectorXd& psi_means,
                             const CartControl& control = {});

// Deterministic indented text rendering.
std::string render(const SummaryTree& tree);

// DOT-format export for graph viewers.
std::string to_dot(const SummaryTree& tree);

}  // namespace odtr
