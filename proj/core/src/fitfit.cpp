#include "odtr/fitfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace odtr {

namespace {

struct SplitChoice {
  bool found = false;
  int feature = 0;
  double threshold = 0.0;
  double sse_drop = 0.0;
};

double node_sse(const Eigen::VectorXd& y, const std::vector<int>& rows) {
  double sum = 0.0;
  for (int r : rows) sum += y(r);
  const double mean = sum / static_cast<double>(rows.size());
  double sse = 0.0;
  for (int r : rows) {
    const double d = y(r) - mean;
    sse += d * d;
  }
  return sse;
}

SplitChoice best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<int>& rows, const CartControl& ctl) {
  SplitChoice best;
  const int p = static_cast<int>(X.cols());
  const int n = static_cast<int>(rows.size());
  const double node_total_sse = node_sse(y, rows);
  std::vector<std::pair<double, double>> vals;  // (x, y) sorted by x
  vals.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < p; ++f) {
    vals.clear();
    for (int r : rows) vals.emplace_back(X(r, f), y(r));
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) continue;
    // prefix sums let each midpoint threshold be scored in O(1)
    double lsum = 0.0, lsq = 0.0;
    double tsum = 0.0, tsq = 0.0;
    for (const auto& v : vals) {
      tsum += v.second;
      tsq += v.second * v.second;
    }
    for (int i = 0; i + 1 < n; ++i) {
      lsum += vals[static_cast<std::size_t>(i)].second;
      lsq += vals[static_cast<std::size_t>(i)].second * vals[static_cast<std::size_t>(i)].second;
      const double xl = vals[static_cast<std::size_t>(i)].first;
      const double xr = vals[static_cast<std::size_t>(i + 1)].first;
      if (xl == xr) continue;  // threshold must separate distinct values
      const int nl = i + 1, nr = n - nl;
      if (nl < ctl.min_bucket || nr < ctl.min_bucket) continue;
      const double rsum = tsum - lsum, rsq = tsq - lsq;
      const double child_sse = (lsq - lsum * lsum / nl) + (rsq - rsum * rsum / nr);
      const double drop = node_total_sse - child_sse;
      // strict > keeps the first-seen candidate on exact ties, and the scan
      // order (feature index ascending, threshold ascending) is the tie rule
      if (drop > 0.0 && drop > best.sse_drop) {
        best.found = true;
        best.feature = f;
        best.threshold = 0.5 * (xl + xr);
        best.sse_drop = drop;
      }
    }
  }
  return best;
}

void grow(SummaryTree& tree, int node_id, const Eigen::MatrixXd& X,
          const Eigen::VectorXd& y, std::vector<int> rows, int depth,
          double root_sse, const CartControl& ctl) {
  SummaryNode& self = tree.nodes[static_cast<std::size_t>(node_id)];
  double sum = 0.0;
  for (int r : rows) sum += y(r);
  self.n = static_cast<int>(rows.size());
  self.mean_psi = sum / self.n;
  self.action = self.mean_psi > 0.0 ? 1 : -1;

  if (self.n < ctl.min_split || depth >= ctl.max_depth) return;
  const SplitChoice s = best_split(X, y, rows, ctl);
  if (!s.found) return;
  if (root_sse <= 0.0 || s.sse_drop < ctl.complexity * root_sse) return;

  std::vector<int> lrows, rrows;
  for (int r : rows) {
    (X(r, s.feature) < s.threshold ? lrows : rrows).push_back(r);
  }
  const int li = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const int ri = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  SummaryNode& self2 = tree.nodes[static_cast<std::size_t>(node_id)];
  self2.feature = s.feature;
  self2.threshold = s.threshold;
  self2.left = li;
  self2.right = ri;
  grow(tree, li, X, y, std::move(lrows), depth + 1, root_sse, ctl);
  grow(tree, ri, X, y, std::move(rrows), depth + 1, root_sse, ctl);
}

double tree_sse(const SummaryTree& tree, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const SummaryNode& nd = tree.nodes[static_cast<std::size_t>(node)];
      node = X(i, nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    const double d = y(i) - tree.nodes[static_cast<std::size_t>(node)].mean_psi;
    sse += d * d;
  }
  return sse;
}

void render_node(const SummaryTree& tree, int node_id, int depth, std::ostringstream& os) {
  const SummaryNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  char buf[160];
  if (nd.feature < 0) {
    std::snprintf(buf, sizeof(buf), "%sleaf n=%d mean_psi=%.6f action=%+d\n", pad.c_str(),
                  nd.n, nd.mean_psi, nd.action);
    os << buf;
    return;
  }
  std::snprintf(buf, sizeof(buf), "%sif %s < %.6f:\n", pad.c_str(),
                tree.feature_names[static_cast<std::size_t>(nd.feature)].c_str(),
                nd.threshold);
  os << buf;
  render_node(tree, nd.left, depth + 1, os);
  std::snprintf(buf, sizeof(buf), "%selse:\n", pad.c_str());
  os << buf;
  render_node(tree, nd.right, depth + 1, os);
}

}  // namespace

SummaryTree fit_summary_tree(const Eigen::MatrixXd& features,
                             const std::vector<std::string>& feature_names,
                             const Eigen::VectorXd& psi_means,
                             const CartControl& control) {
  const Eigen::Index n = features.rows();
  if (psi_means.size() != n) {
    throw std::invalid_argument("fit_summary_tree: target length mismatch");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
    throw std::invalid_argument("fit_summary_tree: feature name count mismatch");
  }
  if (control.min_bucket > control.min_split || control.complexity < 0.0) {
    throw std::invalid_argument("fit_summary_tree: bad control");
  }
  if (n < control.min_split) {
    throw std::invalid_argument("fit_summary_tree: fewer rows than min_split");
  }

  SummaryTree tree;
  tree.feature_names = feature_names;
  tree.nodes.emplace_back();
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = static_cast<int>(i);
  const double root_sse = node_sse(psi_means, rows);
  // round-off in an (effectively) constant target must not manufacture splits
  const double sse_floor =
      1e-12 * static_cast<double>(n) * (1.0 + psi_means.squaredNorm() / static_cast<double>(n));
  const double eff_sse = root_sse > sse_floor ? root_sse : 0.0;
  grow(tree, 0, features, psi_means, std::move(rows), 0, eff_sse, control);
  tree.r2 = eff_sse > 0.0 ? 1.0 - tree_sse(tree, features, psi_means) / root_sse : 0.0;
  return tree;
}

std::string render(const SummaryTree& tree) {
  std::ostringstream os;
  render_node(tree, 0, 0, os);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "R2=%.6f\n", tree.r2);
  os << buf;
  return os.str();
}

std::string to_dot(const SummaryTree& tree) {
  std::ostringstream os;
  os << "digraph summary_tree {\n  node [shape=box];\n";
  char buf[200];
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const SummaryNode& nd = tree.nodes[i];
    if (nd.feature >= 0) {
      std::snprintf(buf, sizeof(buf), "  n%zu [label=\"%s < %.4f\"];\n", i,
                    tree.feature_names[static_cast<std::size_t>(nd.feature)].c_str(),
                    nd.threshold);
      os << buf;
      std::snprintf(buf, sizeof(buf), "  n%zu -> n%d [label=\"yes\"];\n  n%zu -> n%d [label=\"no\"];\n",
                    i, nd.left, i, nd.right);
      os << buf;
    } else {
      std::snprintf(buf, sizeof(buf), "  n%zu [label=\"n=%d\\nmean=%.4f\\naction=%+d\"];\n", i,
                    nd.n, nd.mean_psi, nd.action);
      os << buf;
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace odtr
