#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "odtr/prob.hpp"
#include "odtr/rng.hpp"

namespace odtr {

struct BartHyper {
  int M = 200;              // tree count
  double alpha = 0.95;      // depth-prior base
  double beta_depth = 2.0;  // depth-prior power
  double b = 2.0;           // leaf-prior scale divisor
  double sigma_mu = 0.0;    // 0 -> 3/(b*sqrt(M)) (the unit-variance latent scale)
  double nu = 3.0;          // variance-prior dof
  double lambda = 1.0;      // variance-prior scale; see lambda_quantile_default
  double p_grow = 0.28;
  double p_prune = 0.28;
  double p_change = 0.44;

  double resolved_sigma_mu() const;
};

// P(node at `depth` is non-terminal) = alpha * (1 + depth)^(-beta_depth).
double split_prob(const BartHyper& hyper, int depth);

// lambda such that IG(nu/2, nu*lambda/2) puts probability `q` below s2.
double lambda_quantile_default(double s2, double nu, double q = 0.9);

// Training features plus the global candidate-threshold grid: midpoints of
// sorted unique values per feature (a binary +-1 feature yields the single
// threshold 0).
struct BartData {
  Eigen::MatrixXd X;
  std::vector<std::vector<double>> thresholds;
};

BartData make_bart_data(Eigen::MatrixXd X);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double mu = 0.0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  bool is_leaf() const { return feature < 0; }
};

// Binary regression tree over an arena of nodes; pruned slots are recycled.
class RegressionTree {
 public:
  RegressionTree() { nodes_.push_back(TreeNode{}); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int root() const { return 0; }

  int route(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  void set_mu(int id, double mu) { nodes_[static_cast<std::size_t>(id)].mu = mu; }
  void grow(int leaf, int feature, double threshold);
  void prune(int internal);  // both children must be leaves
  void change(int internal, int feature, double threshold);

  std::vector<int> leaf_ids() const;
  std::vector<int> internal_ids() const;
  std::vector<int> prunable_ids() const;  // internal nodes with two leaf children
  int n_leaves() const;

 private:
  int allocate();
  std::vector<TreeNode> nodes_;
  std::vector<int> free_;
};

// Node-by-node log prior: split/no-split terms plus uniform feature and
// threshold probabilities over each internal node's available rule set.
double log_tree_prior(const BartHyper& hyper, const RegressionTree& tree,
                      const BartData& data);

enum class TreeMove { Grow, Prune, Change };

struct TreeProposal {
  RegressionTree tree;
  TreeMove move = TreeMove::Grow;
  int node = 0;                  // subtree root whose partition changed
  double log_proposal_ratio = 0.0;  // log q(T'->T) - log q(T->T')
  double log_prior_ratio = 0.0;     // log p(T') - log p(T)
};

// One Metropolis tree proposal; empty when the drawn move is impossible.
std::optional<TreeProposal> propose(SeededRng& rng, const RegressionTree& tree,
                                    const BartData& data, const BartHyper& hyper);

// Sum-of-trees state with cached per-tree training fits.
class Forest {
 public:
  Forest(std::shared_ptr<const BartData> data, const BartHyper& hyper);

  // One Bayesian-backfitting pass: per tree, Metropolis structure move by the
  // integrated-leaf marginal likelihood ratio, then conjugate leaf draws.
  void sweep(SeededRng& rng, const Eigen::VectorXd& targets, double variance);

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const Eigen::VectorXd& training_fits() const { return total_; }
  Eigen::VectorXd recompute_training_fits() const;  // debug cross-check

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const BartData& data() const { return *data_; }
  double acceptance_rate() const {
    return proposals_ > 0 ? static_cast<double>(accepts_) / proposals_ : 0.0;
  }

 private:
  std::shared_ptr<const BartData> data_;
  BartHyper hyper_;
  std::vector<RegressionTree> trees_;
  std::vector<Eigen::VectorXd> fits_;  // per tree, training rows
  Eigen::VectorXd total_;
  long proposals_ = 0;
  long accepts_ = 0;
};

// sigma^2 draw from IG((nu + n)/2, (nu*lambda + sum r^2)/2).
double sample_variance(SeededRng& rng, const Eigen::VectorXd& residuals,
                       const BartHyper& hyper);

}  // namespace odtr
