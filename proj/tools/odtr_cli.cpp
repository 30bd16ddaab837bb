#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "odtr/csv.hpp"
#include "odtr/dtr.hpp"
#include "odtr/errors.hpp"
#include "odtr/fitfit.hpp"
#include "odtr/reproduce.hpp"
#include "odtr/simlab.hpp"

namespace {

using nlohmann::json;
using namespace odtr;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  std::vector<int> scenarios{1};
  std::vector<std::string> estimators{"qlearning"};
  int n_tr = 1000, n_te = 1000, replications = 10;
  int draws = 4000, burnin = 2000, trees = 200, rql = 50, rbml = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out, data, table = "table2", tree_out;
  double scale = 1.0;
  bool bootstrap = false;
  int bootstrap_b = 1000;
};

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "qlearning") return EstimatorKind::QLearning;
  if (name == "bml-bp") return EstimatorKind::BmlBP;
  if (name == "bml-obart") return EstimatorKind::BmlObart;
  throw ConfigError("unknown estimator '" + name + "' (qlearning|bml-bp|bml-obart)");
}

void apply_json_config(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  try {
    auto ints = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("scenario")) {
      cfg.scenarios.clear();
      if (j["scenario"].is_array()) {
        for (const auto& v : j["scenario"]) cfg.scenarios.push_back(v.get<int>());
      } else {
        cfg.scenarios.push_back(j["scenario"].get<int>());
      }
    }
    if (j.contains("estimator")) {
      cfg.estimators.clear();
      if (j["estimator"].is_array()) {
        for (const auto& v : j["estimator"]) cfg.estimators.push_back(v.get<std::string>());
      } else {
        cfg.estimators.push_back(j["estimator"].get<std::string>());
      }
    }
    ints("ntr", cfg.n_tr);
    ints("nte", cfg.n_te);
    ints("reps", cfg.replications);
    ints("draws", cfg.draws);
    ints("burnin", cfg.burnin);
    ints("trees", cfg.trees);
    ints("rql", cfg.rql);
    ints("rbml", cfg.rbml);
    ints("seed", cfg.seed);
    ints("threads", cfg.threads);
    ints("out", cfg.out);
    ints("data", cfg.data);
    ints("table", cfg.table);
    ints("tree_out", cfg.tree_out);
    ints("scale", cfg.scale);
    ints("bootstrap", cfg.bootstrap);
    ints("bootstrap_b", cfg.bootstrap_b);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value error: ") + e.what());
  }
  for (const std::string& e : cfg.estimators) (void)parse_estimator(e);
}

void validate(const RunConfig& cfg) {
  if (cfg.n_tr < 1 || cfg.n_te < 1 || cfg.replications < 1 || cfg.draws < 1 ||
      cfg.trees < 1 || cfg.rql < 1 || cfg.rbml < 1 || cfg.threads < 1) {
    throw ConfigError("all counts must be positive");
  }
  if (cfg.burnin < 0 || cfg.burnin >= cfg.draws) {
    throw ConfigError("need draws > burnin >= 0");
  }
  for (int sc : cfg.scenarios) {
    if (sc < 1 || sc > 12) throw ConfigError("scenario ids must be 1..12");
  }
  if (cfg.estimators.empty()) throw ConfigError("need at least one estimator");
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
}

StudyConfig to_study_config(const RunConfig& cfg) {
  StudyConfig s;
  s.scenarios = cfg.scenarios;
  s.estimators.clear();
  for (const std::string& e : cfg.estimators) s.estimators.push_back(parse_estimator(e));
  s.n_tr = cfg.n_tr;
  s.n_te = cfg.n_te;
  s.replications = cfg.replications;
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  s.ql.r_ql = cfg.rql;
  for (BigSamplerConfig* b : {&s.bp, &s.obart}) {
    b->r_bml = cfg.rbml;
    b->s2_draws = cfg.draws;
    b->s2_burnin = cfg.burnin;
  }
  s.obart.obart.bart.M = cfg.trees;
  return s;
}

int run_simulate(const RunConfig& cfg) {
  const ScenarioSpec spec = ScenarioSpec::get(cfg.scenarios.front());
  SeededRng rng(cfg.seed, 0);
  const TwoStageDataset data = generate(spec, cfg.n_tr, rng);
  write_output(cfg.out, dataset_to_csv(data));
  return 0;
}

std::string psi_table_csv(const DtrFitResult& fit) {
  std::ostringstream os;
  os << "id,stage,psi_point,lo,hi,action,tie_flag\n";
  char buf[32];
  auto num = [&](double v) -> std::string {
    if (std::isnan(v)) return "na";
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
  };
  for (int stage = 1; stage <= 2; ++stage) {
    const StagePsi& s = stage == 1 ? fit.psi1_train : fit.psi2_train;
    const std::vector<int>& act = stage == 1 ? fit.action1_train : fit.action2_train;
    const bool has_ci = s.lo.size() == s.point.size();
    for (Eigen::Index i = 0; i < s.point.size(); ++i) {
      os << i << ',' << stage << ',' << num(s.point(i)) << ','
         << (has_ci ? num(s.lo(i)) : "na") << ',' << (has_ci ? num(s.hi(i)) : "na") << ','
         << act[static_cast<std::size_t>(i)] << ','
         << (s.point(i) == 0.0 ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

int run_fit(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("fit requires --data <csv>");
  const IngestReport rep = load_dataset_csv(cfg.data);
  if (rep.relabeled) {
    std::cerr << "note: y2 labels remapped to 1..K; original labels:";
    for (int v : rep.label_map) std::cerr << ' ' << v;
    std::cerr << '\n';
  }
  const TwoStageDataset& data = rep.data;
  const std::vector<Trajectory> queries;  // psi reported at the observed histories
  SeededRng rng(cfg.seed, 0);
  const EstimatorKind kind = parse_estimator(cfg.estimators.front());
  DtrFitResult fit;
  if (kind == EstimatorKind::QLearning) {
    QLearningConfig c;
    c.r_ql = cfg.rql;
    c.do_bootstrap = cfg.bootstrap;
    c.bootstrap.B = cfg.bootstrap_b;
    fit = qlearning_fit(data, queries, c, rng);
  } else {
    BigSamplerConfig c;
    c.stage_model = kind == EstimatorKind::BmlBP ? StageModelKind::BP : StageModelKind::Obart;
    c.r_bml = cfg.rbml;
    c.s2_draws = cfg.draws;
    c.s2_burnin = cfg.burnin;
    c.obart.bart.M = cfg.trees;
    fit = big_sampler_fit(data, queries, c, rng);
  }
  write_output(cfg.out, psi_table_csv(fit));

  if (!cfg.tree_out.empty()) {
    const std::size_t n = data.size();
    const std::size_t p1 = data.x1_names.size();
    Eigen::MatrixXd f1(n, p1);
    Eigen::MatrixXd f2(n, p1 + 1 + data.x2_names.size());
    std::vector<std::string> names1 = data.x1_names, names2 = data.x1_names;
    names2.push_back("a1");
    for (const std::string& s : data.x2_names) names2.push_back(s);
    for (std::size_t i = 0; i < n; ++i) {
      const Trajectory& t = data.trajectories[i];
      for (std::size_t j = 0; j < p1; ++j) f1(i, j) = f2(i, j) = t.x1[j];
      f2(i, p1) = t.a1;
      for (std::size_t j = 0; j < t.x2.size(); ++j) f2(i, p1 + 1 + j) = t.x2[j];
    }
    const SummaryTree t1 = fit_summary_tree(f1, names1, fit.psi1_train.point);
    const SummaryTree t2 = fit_summary_tree(f2, names2, fit.psi2_train.point);
    write_output(cfg.tree_out + "_stage1.txt", render(t1));
    write_output(cfg.tree_out + "_stage2.txt", render(t2));
  }
  return 0;
}

int run_evaluate(const RunConfig& cfg) {
  const std::vector<StudyRow> rows = run_study(to_study_config(cfg));
  write_output(cfg.out, study_csv(rows));
  return 0;
}

int run_reproduce(const RunConfig& cfg) {
  StudyConfig base = to_study_config(cfg);
  write_output(cfg.out, reproduce_table(cfg.table, cfg.scale, base));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odtr: optimal dynamic treatment regimes for ordinal outcomes"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--seed", cfg.seed, "master RNG seed");
    sub->add_option("--threads", cfg.threads, "replication fan-out thread budget");
    sub->add_option("--scenario", cfg.scenarios, "scenario ids (1..12)");
    sub->add_option("--estimator", cfg.estimators, "qlearning|bml-bp|bml-obart");
    sub->add_option("--ntr", cfg.n_tr, "training sample size");
    sub->add_option("--nte", cfg.n_te, "test sample size");
    sub->add_option("--reps", cfg.replications, "replication count");
    sub->add_option("--draws", cfg.draws, "posterior draws (stage 2)");
    sub->add_option("--burnin", cfg.burnin, "burn-in draws (stage 2)");
    sub->add_option("--trees", cfg.trees, "BART tree count");
    sub->add_option("--rql", cfg.rql, "Q-learning imputation repetitions");
    sub->add_option("--rbml", cfg.rbml, "stage-2 draws carried to stage 1");
    sub->add_option("--out", cfg.out, "output path (default stdout)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a scenario dataset as CSV");
  CLI::App* fit = app.add_subcommand("fit", "fit one estimator to a dataset CSV");
  CLI::App* eva = app.add_subcommand("evaluate", "run a simulation study");
  CLI::App* rep = app.add_subcommand("reproduce", "re-run a published table at reduced scale");
  for (CLI::App* sub : {sim, fit, eva, rep}) add_common(sub);
  fit->add_option("--data", cfg.data, "input dataset CSV");
  fit->add_flag("--bootstrap", cfg.bootstrap, "m-out-of-n bootstrap intervals (qlearning)");
  fit->add_option("--bootstrap-b", cfg.bootstrap_b, "bootstrap replicates");
  fit->add_option("--tree-out", cfg.tree_out, "prefix for summary-tree text files");
  rep->add_option("--table", cfg.table, "table2|tab1|tab2|tab4");
  rep->add_option("--scale", cfg.scale, "scale factor in (0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) {
      // config supplies defaults; re-parse so explicit flags win
      apply_json_config(config_path, cfg);
      try {
        app.clear();
        app.parse(argc, argv);
      } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
      }
    }
    validate(cfg);
    if (sim->parsed()) return run_simulate(cfg);
    if (fit->parsed()) return run_fit(cfg);
    if (eva->parsed()) return run_evaluate(cfg);
    return run_reproduce(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "sampler divergence: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
