#include "odtr/dataset.hpp"

#include <set>

namespace odtr {

void TwoStageDataset::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("dataset: empty");
  if (n_categories < 2) throw std::invalid_argument("dataset: K must be >= 2");
  const std::size_t p1 = trajectories.front().x1.size();
  const std::size_t p2 = trajectories.front().x2.size();
  std::set<int> seen;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& t = trajectories[i];
    if (t.x1.size() != p1 || t.x2.size() != p2) {
      throw std::invalid_argument("dataset: inconsistent feature dimensions at row " +
                                  std::to_string(i));
    }
    if (t.a1 != 1 && t.a1 != -1) {
      throw std::invalid_argument("dataset: a1 not in {-1,+1} at row " + std::to_string(i));
    }
    if (t.a2 != 1 && t.a2 != -1) {
      throw std::invalid_argument("dataset: a2 not in {-1,+1} at row " + std::to_string(i));
    }
    if (t.y2 < 1 || t.y2 > n_categories) {
      throw std::invalid_argument("dataset: label outside 1..K at row " + std::to_string(i));
    }
    seen.insert(t.y2);
  }
  if (seen.size() < 2) {
    throw std::invalid_argument("dataset: fewer than 2 observed outcome categories");
  }
}

Eigen::VectorXd stage2_row(const std::vector<double>& x1, int a1,
                           const std::vector<double>& x2) {
  Eigen::VectorXd row(1 + x1.size() + 1 + x2.size());
  row(0) = 1.0;
  Eigen::Index j = 1;
  for (double v : x1) row(j++) = v;
  row(j++) = static_cast<double>(a1);
  for (double v : x2) row(j++) = v;
  return row;
}

Eigen::VectorXd stage1_row(const std::vector<double>& x1) {
  Eigen::VectorXd row(1 + x1.size());
  row(0) = 1.0;
  for (std::size_t j = 0; j < x1.size(); ++j) row(j + 1) = x1[j];
  return row;
}

namespace {

std::vector<std::string> with_intercept(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  out.reserve(names.size() + 1);
  out.push_back("(intercept)");
  for (const auto& n : names) out.push_back(n);
  return out;
}

}  // namespace

StageDesign build_stage2_design(const TwoStageDataset& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = 1 + static_cast<Eigen::Index>(data.x1_names.size()) + 1 +
                         static_cast<Eigen::Index>(data.x2_names.size());
  StageDesign d;
  d.main_block.resize(n, p);
  d.inter_block.resize(n, p);
  d.treatment.resize(n);
  d.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[i];
    const Eigen::VectorXd row = stage2_row(t.x1, t.a1, t.x2);
    d.main_block.row(i) = row;
    d.inter_block.row(i) = row;
    d.treatment(i) = t.a2;
    d.labels(i) = t.y2;
  }
  std::vector<std::string> names = data.x1_names;
  names.push_back("a1");
  for (const auto& n2 : data.x2_names) names.push_back(n2);
  d.main_names = with_intercept(names);
  d.inter_names = d.main_names;
  return d;
}

StageDesign build_stage1_design(const TwoStageDataset& data,
                                const std::vector<int>& pseudo_outcomes) {
  if (pseudo_outcomes.size() != data.size()) {
    throw std::invalid_argument("stage1 design: pseudo-outcome length mismatch");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = 1 + static_cast<Eigen::Index>(data.x1_names.size());
  StageDesign d;
  d.main_block.resize(n, p);
  d.inter_block.resize(n, p);
  d.treatment.resize(n);
  d.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[i];
    const Eigen::VectorXd row = stage1_row(t.x1);
    d.main_block.row(i) = row;
    d.inter_block.row(i) = row;
    d.treatment(i) = t.a1;
    d.labels(i) = pseudo_outcomes[i];
  }
  d.main_names = with_intercept(data.x1_names);
  d.inter_names = d.main_names;
  return d;
}

}  // namespace odtr
