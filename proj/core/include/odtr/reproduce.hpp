#pragma once

#include <string>
#include <vector>

#include "odtr/simlab.hpp"

namespace odtr {

// One published result row: a (scenario, method) pair with per-stage metrics.
// Psi tables carry (bias, cover, mse, pot) per stage; the value table carries
// (value_true, value_est, value_obs) per stage.
struct PaperRow {
  int scenario = 0;
  std::string method;  // Q-learning | dWOLS | BML-BP | BML-OBART
  std::vector<double> stage1, stage2;
};

struct PaperTable {
  std::string id;        // table2 | tab1 | tab2 | tab4
  int n_tr = 0;
  bool value_table = false;
  std::vector<std::string> metrics;  // per-stage metric names
  std::vector<PaperRow> rows;
};

// Embedded published tables: "table2" (psi metrics, n_tr = 1000), "tab1"
// (1500), "tab2" (2000), "tab4" (regime values, n_tr = 1000).
const PaperTable& paper_table(const std::string& id);

double paper_value(const std::string& table, int scenario, const std::string& method,
                   int stage, const std::string& metric);

// Runs the study behind `id` with replications and sample sizes scaled by
// `scale`, then emits a long-format CSV joining the published number, our
// estimate, and the delta. dWOLS rows appear as "n/a (out of scope)".
// `base` supplies the scenario subset, seed, thread budget, and sampler
// settings; its estimator list is replaced by the three implemented methods.
std::string reproduce_table(const std::string& id, double scale, const StudyConfig& base);

}  // namespace odtr
