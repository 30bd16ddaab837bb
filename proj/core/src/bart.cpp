#include "odtr/bart.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odtr {

double BartHyper::resolved_sigma_mu() const {
  return sigma_mu > 0.0 ? sigma_mu : 3.0 / (b * std::sqrt(static_cast<double>(M)));
}

double split_prob(const BartHyper& hyper, int depth) {
  return hyper.alpha * std::pow(1.0 + static_cast<double>(depth), -hyper.beta_depth);
}

namespace {

// Regularized lower incomplete gamma P(a, x): series for x < a+1, continued
// fraction otherwise (Numerical Recipes style).
double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-14) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double lambda_quantile_default(double s2, double nu, double q) {
  if (!(s2 > 0.0)) throw std::invalid_argument("lambda_quantile_default: s2 <= 0");
  // want P(sigma^2 < s2) = q, i.e. P_gamma(nu/2, c) = 1 - q with c = nu*lambda/(2 s2)
  const double a = 0.5 * nu;
  const double target = 1.0 - q;
  double lo = 1e-12, hi = 1.0;
  while (gamma_p(a, hi) < target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gamma_p(a, mid) < target ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  return 2.0 * s2 * c / nu;
}

BartData make_bart_data(Eigen::MatrixXd X) {
  BartData d;
  d.thresholds.resize(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    std::vector<double> vals(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) vals[i] = X(i, j);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    auto& ts = d.thresholds[static_cast<std::size_t>(j)];
    ts.reserve(vals.size());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      ts.push_back(0.5 * (vals[k] + vals[k + 1]));
    }
  }
  d.X = std::move(X);
  return d;
}

int RegressionTree::route(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int cur = 0;
  while (!nodes_[static_cast<std::size_t>(cur)].is_leaf()) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(cur)];
    cur = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return cur;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return nodes_[static_cast<std::size_t>(route(x))].mu;
}

int RegressionTree::allocate() {
  if (!free_.empty()) {
    const int id = free_.back();
    free_.pop_back();
    nodes_[static_cast<std::size_t>(id)] = TreeNode{};
    return id;
  }
  nodes_.push_back(TreeNode{});
  return static_cast<int>(nodes_.size()) - 1;
}

void RegressionTree::grow(int leaf, int feature, double threshold) {
  TreeNode& n = nodes_[static_cast<std::size_t>(leaf)];
  if (!n.is_leaf()) throw std::logic_error("grow: node is not a leaf");
  const int depth = n.depth;
  const int l = allocate();
  const int r = allocate();
  TreeNode& n2 = nodes_[static_cast<std::size_t>(leaf)];  // allocate may reallocate
  n2.feature = feature;
  n2.threshold = threshold;
  n2.left = l;
  n2.right = r;
  nodes_[static_cast<std::size_t>(l)].parent = leaf;
  nodes_[static_cast<std::size_t>(l)].depth = depth + 1;
  nodes_[static_cast<std::size_t>(r)].parent = leaf;
  nodes_[static_cast<std::size_t>(r)].depth = depth + 1;
}

void RegressionTree::prune(int internal) {
  TreeNode& n = nodes_[static_cast<std::size_t>(internal)];
  if (n.is_leaf() || !nodes_[static_cast<std::size_t>(n.left)].is_leaf() ||
      !nodes_[static_cast<std::size_t>(n.right)].is_leaf()) {
    throw std::logic_error("prune: children are not both leaves");
  }
  free_.push_back(n.left);
  free_.push_back(n.right);
  n.feature = -1;
  n.left = n.right = -1;
  n.mu = 0.0;
}

void RegressionTree::change(int internal, int feature, double threshold) {
  TreeNode& n = nodes_[static_cast<std::size_t>(internal)];
  if (n.is_leaf()) throw std::logic_error("change: node is a leaf");
  n.feature = feature;
  n.threshold = threshold;
}

std::vector<int> RegressionTree::leaf_ids() const {
  std::vector<int> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      out.push_back(id);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return out;
}

std::vector<int> RegressionTree::internal_ids() const {
  std::vector<int> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.is_leaf()) {
      out.push_back(id);
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return out;
}

std::vector<int> RegressionTree::prunable_ids() const {
  std::vector<int> out;
  for (int id : internal_ids()) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
    if (nodes_[static_cast<std::size_t>(n.left)].is_leaf() &&
        nodes_[static_cast<std::size_t>(n.right)].is_leaf()) {
      out.push_back(id);
    }
  }
  return out;
}

int RegressionTree::n_leaves() const { return static_cast<int>(leaf_ids().size()); }

namespace {

// Rows of the training data that reach `node`.
std::vector<int> rows_in_node(const RegressionTree& tree, const BartData& data, int node) {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    int cur = 0;
    bool hit = (cur == node);
    while (!hit && !tree.node(cur).is_leaf()) {
      const TreeNode& n = tree.node(cur);
      cur = data.X(i, n.feature) <= n.threshold ? n.left : n.right;
      hit = (cur == node);
    }
    if (hit) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

struct NodeRuleSet {
  std::vector<int> features;       // features with >= 1 valid threshold
  std::vector<int> n_thresholds;   // aligned counts
  std::vector<int> first_index;    // index of the first valid threshold
};

NodeRuleSet node_rules(const BartData& data, const std::vector<int>& rows) {
  NodeRuleSet s;
  const Eigen::Index p = data.X.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    double lo = data.X(rows.front(), j), hi = lo;
    for (int r : rows) {
      lo = std::min(lo, data.X(r, j));
      hi = std::max(hi, data.X(r, j));
    }
    const auto& ts = data.thresholds[static_cast<std::size_t>(j)];
    const auto first = std::upper_bound(ts.begin(), ts.end(), lo);
    const auto last = std::lower_bound(ts.begin(), ts.end(), hi);
    if (last > first) {
      s.features.push_back(static_cast<int>(j));
      s.n_thresholds.push_back(static_cast<int>(last - first));
      s.first_index.push_back(static_cast<int>(first - ts.begin()));
    }
  }
  return s;
}

int rule_count_for_feature(const NodeRuleSet& s, int feature) {
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    if (s.features[i] == feature) return s.n_thresholds[i];
  }
  return 0;
}

// log [ split_prob(d) * (1 - split_prob(d+1))^2 / (1 - split_prob(d)) ]
// - log(available features) - log(thresholds for the chosen feature)
double log_grow_prior_ratio(const BartHyper& h, int depth, int n_feat, int n_thr) {
  const double sd = split_prob(h, depth);
  const double sd1 = split_prob(h, depth + 1);
  return std::log(sd) + 2.0 * std::log(1.0 - sd1) - std::log(1.0 - sd) -
         std::log(static_cast<double>(n_feat)) - std::log(static_cast<double>(n_thr));
}

}  // namespace

double log_tree_prior(const BartHyper& hyper, const RegressionTree& tree,
                      const BartData& data) {
  double lp = 0.0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(id);
    const double sp = split_prob(hyper, n.depth);
    if (n.is_leaf()) {
      lp += std::log(1.0 - sp);
      continue;
    }
    const std::vector<int> rows = rows_in_node(tree, data, id);
    const NodeRuleSet rules = node_rules(data, rows);
    const int r = rule_count_for_feature(rules, n.feature);
    if (r == 0) return -std::numeric_limits<double>::infinity();
    lp += std::log(sp) - std::log(static_cast<double>(rules.features.size())) -
          std::log(static_cast<double>(r));
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
  return lp;
}

std::optional<TreeProposal> propose(SeededRng& rng, const RegressionTree& tree,
                                    const BartData& data, const BartHyper& hyper) {
  const double u = rng.uniform01();
  if (u < hyper.p_grow) {
    const std::vector<int> leaves = tree.leaf_ids();
    const int leaf = leaves[rng.uniform_index(leaves.size())];
    const std::vector<int> rows = rows_in_node(tree, data, leaf);
    if (rows.empty()) return std::nullopt;
    const NodeRuleSet rules = node_rules(data, rows);
    if (rules.features.empty()) return std::nullopt;
    const std::size_t fi = rng.uniform_index(rules.features.size());
    const int feature = rules.features[fi];
    const int n_thr = rules.n_thresholds[fi];
    const int ti = rules.first_index[fi] + static_cast<int>(rng.uniform_index(n_thr));
    const double threshold = data.thresholds[static_cast<std::size_t>(feature)][ti];

    TreeProposal p;
    p.move = TreeMove::Grow;
    p.node = leaf;
    p.tree = tree;
    p.tree.grow(leaf, feature, threshold);
    const int n_feat = static_cast<int>(rules.features.size());
    p.log_prior_ratio = log_grow_prior_ratio(hyper, tree.node(leaf).depth, n_feat, n_thr);
    const double log_q_fwd = std::log(hyper.p_grow) -
                             std::log(static_cast<double>(leaves.size())) -
                             std::log(static_cast<double>(n_feat)) -
                             std::log(static_cast<double>(n_thr));
    const double log_q_rev =
        std::log(hyper.p_prune) -
        std::log(static_cast<double>(p.tree.prunable_ids().size()));
    p.log_proposal_ratio = log_q_rev - log_q_fwd;
    return p;
  }
  if (u < hyper.p_grow + hyper.p_prune) {
    const std::vector<int> prunable = tree.prunable_ids();
    if (prunable.empty()) return std::nullopt;
    const int node = prunable[rng.uniform_index(prunable.size())];
    const std::vector<int> rows = rows_in_node(tree, data, node);
    const NodeRuleSet rules = node_rules(data, rows);
    const int n_feat = static_cast<int>(rules.features.size());
    const int n_thr = rule_count_for_feature(rules, tree.node(node).feature);

    TreeProposal p;
    p.move = TreeMove::Prune;
    p.node = node;
    p.tree = tree;
    p.tree.prune(node);
    p.log_prior_ratio = -log_grow_prior_ratio(hyper, tree.node(node).depth, n_feat, n_thr);
    const double log_q_fwd =
        std::log(hyper.p_prune) - std::log(static_cast<double>(prunable.size()));
    const double log_q_rev = std::log(hyper.p_grow) -
                             std::log(static_cast<double>(p.tree.n_leaves())) -
                             std::log(static_cast<double>(n_feat)) -
                             std::log(static_cast<double>(n_thr));
    p.log_proposal_ratio = log_q_rev - log_q_fwd;
    return p;
  }
  const std::vector<int> internals = tree.internal_ids();
  if (internals.empty()) return std::nullopt;
  const int node = internals[rng.uniform_index(internals.size())];
  const std::vector<int> rows = rows_in_node(tree, data, node);
  const NodeRuleSet rules = node_rules(data, rows);
  if (rules.features.empty()) return std::nullopt;
  const std::size_t fi = rng.uniform_index(rules.features.size());
  const int feature = rules.features[fi];
  const int ti =
      rules.first_index[fi] + static_cast<int>(rng.uniform_index(rules.n_thresholds[fi]));
  const double threshold = data.thresholds[static_cast<std::size_t>(feature)][ti];

  TreeProposal p;
  p.move = TreeMove::Change;
  p.node = node;
  p.tree = tree;
  p.tree.change(node, feature, threshold);
  // the new rule must not starve any training leaf below this node
  std::vector<int> counts(p.tree.nodes().size(), 0);
  for (int r : rows) {
    int cur = node;
    while (!p.tree.node(cur).is_leaf()) {
      const TreeNode& n = p.tree.node(cur);
      cur = data.X(r, n.feature) <= n.threshold ? n.left : n.right;
    }
    counts[static_cast<std::size_t>(cur)]++;
  }
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& n = p.tree.node(id);
    if (n.is_leaf()) {
      if (counts[static_cast<std::size_t>(id)] == 0) return std::nullopt;
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  // same rule set both directions: symmetric proposal, structure prior unchanged
  return p;
}

namespace {

// Log marginal likelihood of the residuals routed through the subtree rooted
// at `node`, leaf values integrated out under N(0, sigma_mu^2); terms that
// depend only on the row set are dropped (they cancel in ratios).
double subtree_log_ml(const RegressionTree& tree, const BartData& data, int node,
                      const std::vector<int>& rows, const Eigen::VectorXd& resid,
                      double sigma2, double sigma_mu2) {
  std::vector<double> n_j(tree.nodes().size(), 0.0), s_j(tree.nodes().size(), 0.0);
  for (int r : rows) {
    int cur = node;
    while (!tree.node(cur).is_leaf()) {
      const TreeNode& n = tree.node(cur);
      cur = data.X(r, n.feature) <= n.threshold ? n.left : n.right;
    }
    n_j[static_cast<std::size_t>(cur)] += 1.0;
    s_j[static_cast<std::size_t>(cur)] += resid(r);
  }
  double ml = 0.0;
  for (std::size_t id = 0; id < n_j.size(); ++id) {
    if (n_j[id] == 0.0) continue;
    const double denom = sigma2 + n_j[id] * sigma_mu2;
    ml += 0.5 * std::log(sigma2 / denom) + sigma_mu2 * s_j[id] * s_j[id] / (2.0 * sigma2 * denom);
  }
  return ml;
}

}  // namespace

Forest::Forest(std::shared_ptr<const BartData> data, const BartHyper& hyper)
    : data_(std::move(data)), hyper_(hyper) {
  trees_.resize(static_cast<std::size_t>(hyper_.M));
  fits_.assign(static_cast<std::size_t>(hyper_.M),
               Eigen::VectorXd::Zero(data_->X.rows()));
  total_ = Eigen::VectorXd::Zero(data_->X.rows());
}

void Forest::sweep(SeededRng& rng, const Eigen::VectorXd& targets, double variance) {
  if (targets.size() != data_->X.rows()) {
    throw std::invalid_argument("Forest::sweep: target length mismatch");
  }
  if (!(variance > 0.0)) throw std::invalid_argument("Forest::sweep: variance <= 0");
  const double sigma_mu = hyper_.resolved_sigma_mu();
  const double sigma_mu2 = sigma_mu * sigma_mu;
  const Eigen::Index n = data_->X.rows();

  for (std::size_t m = 0; m < trees_.size(); ++m) {
    RegressionTree& tree = trees_[m];
    const Eigen::VectorXd resid = targets - total_ + fits_[m];

    auto prop = propose(rng, tree, *data_, hyper_);
    if (prop) {
      ++proposals_;
      const std::vector<int> rows = rows_in_node(tree, *data_, prop->node);
      const double ml_new =
          subtree_log_ml(prop->tree, *data_, prop->node, rows, resid, variance, sigma_mu2);
      const double ml_old =
          subtree_log_ml(tree, *data_, prop->node, rows, resid, variance, sigma_mu2);
      const double log_acc = ml_new - ml_old + prop->log_prior_ratio + prop->log_proposal_ratio;
      if (std::log(rng.uniform01()) < log_acc) {
        tree = std::move(prop->tree);
        ++accepts_;
      }
    }

    // conjugate leaf draws on the (possibly updated) structure
    std::vector<double> n_j(tree.nodes().size(), 0.0), s_j(tree.nodes().size(), 0.0);
    std::vector<int> leaf_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const int leaf = tree.route(data_->X.row(i));
      leaf_of[static_cast<std::size_t>(i)] = leaf;
      n_j[static_cast<std::size_t>(leaf)] += 1.0;
      s_j[static_cast<std::size_t>(leaf)] += resid(i);
    }
    for (int leaf : tree.leaf_ids()) {
      const std::size_t id = static_cast<std::size_t>(leaf);
      double mean = 0.0, var = sigma_mu2;
      if (n_j[id] > 0.0) {
        const double denom = variance + n_j[id] * sigma_mu2;
        mean = s_j[id] * sigma_mu2 / denom;
        var = variance * sigma_mu2 / denom;
      }
      tree.set_mu(leaf, mean + std::sqrt(var) * sample_normal(rng));
    }
    Eigen::VectorXd new_fit(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      new_fit(i) = tree.node(leaf_of[static_cast<std::size_t>(i)]).mu;
    }
    total_ += new_fit - fits_[m];
    fits_[m] = std::move(new_fit);
  }
}

double Forest::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != data_->X.cols()) {
    throw std::invalid_argument("Forest::predict: dimension mismatch");
  }
  double sum = 0.0;
  for (const RegressionTree& t : trees_) sum += t.predict(x);
  return sum;
}

Eigen::VectorXd Forest::recompute_training_fits() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(data_->X.rows());
  for (Eigen::Index i = 0; i < data_->X.rows(); ++i) out(i) = predict(data_->X.row(i));
  return out;
}

double sample_variance(SeededRng& rng, const Eigen::VectorXd& residuals,
                       const BartHyper& hyper) {
  if (residuals.size() == 0) throw std::invalid_argument("sample_variance: no residuals");
  const double shape = 0.5 * (hyper.nu + static_cast<double>(residuals.size()));
  const double rate = 0.5 * (hyper.nu * hyper.lambda + residuals.squaredNorm());
  return sample_inverse_gamma(rng, shape, rate);
}

}  // namespace odtr
