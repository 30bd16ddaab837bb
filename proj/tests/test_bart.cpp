#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "odtr/bart.hpp"

using namespace odtr;

TEST_CASE("split_prob follows alpha (1 + depth)^-beta") {
  BartHyper h;
  h.alpha = 0.95;
  h.beta_depth = 2.0;
  CHECK(split_prob(h, 0) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(split_prob(h, 1) == doctest::Approx(0.95 / 4.0).epsilon(1e-12));
  CHECK(split_prob(h, 3) == doctest::Approx(0.95 / 16.0).epsilon(1e-12));
}

TEST_CASE("resolved sigma_mu default is 3/(b sqrt(M))") {
  BartHyper h;
  h.M = 100;
  h.b = 2.0;
  CHECK(h.resolved_sigma_mu() == doctest::Approx(3.0 / (2.0 * 10.0)).epsilon(1e-12));
  h.sigma_mu = 0.7;
  CHECK(h.resolved_sigma_mu() == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("lambda_quantile_default puts 90% of the IG mass below s2") {
  const double nu = 3.0, s2 = 2.5;
  const double lambda = lambda_quantile_default(s2, nu, 0.9);
  SeededRng rng(31, 0);
  const int n = 200000;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    if (sample_inverse_gamma(rng, nu / 2.0, nu * lambda / 2.0) <= s2) ++below;
  }
  CHECK(below / static_cast<double>(n) == doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("candidate thresholds are midpoints of sorted unique values") {
  Eigen::MatrixXd X(5, 2);
  X << 1, -1,
       3, 1,
       2, -1,
       3, 1,
       7, -1;
  const BartData d = make_bart_data(X);
  REQUIRE(d.thresholds.size() == 2);
  const std::vector<double> want0 = {1.5, 2.5, 5.0};
  REQUIRE(d.thresholds[0].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d.thresholds[0][i] == doctest::Approx(want0[i]).epsilon(1e-12));
  }
  REQUIRE(d.thresholds[1].size() == 1);
  CHECK(d.thresholds[1][0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tree mutations and routing") {
  RegressionTree t;
  CHECK(t.n_leaves() == 1);
  t.grow(0, 0, 0.5);
  CHECK(t.n_leaves() == 2);
  t.set_mu(t.node(0).left, -1.0);
  t.set_mu(t.node(0).right, 2.0);
  Eigen::RowVectorXd x(1);
  x << 0.2;
  CHECK(t.predict(x) == doctest::Approx(-1.0));
  x << 0.9;
  CHECK(t.predict(x) == doctest::Approx(2.0));
  const int internal = 0;
  CHECK(t.prunable_ids() == std::vector<int>{internal});
  t.change(internal, 0, 0.8);
  x << 0.7;
  CHECK(t.predict(x) == doctest::Approx(-1.0));
  t.prune(internal);
  CHECK(t.n_leaves() == 1);
}

TEST_CASE("proposal move frequencies match the configured mix") {
  SeededRng rng(32, 0);
  Eigen::MatrixXd X(100, 1);
  for (int i = 0; i < 100; ++i) X(i, 0) = i / 100.0;
  const BartData data = make_bart_data(X);
  BartHyper hyper;
  RegressionTree tree;
  tree.grow(0, 0, 0.495);  // all three move kinds are available

  std::map<TreeMove, int> counts;
  const int trials = 30000;
  int produced = 0;
  for (int i = 0; i < trials; ++i) {
    const auto prop = propose(rng, tree, data, hyper);
    if (prop) {
      counts[prop->move]++;
      ++produced;
    }
  }
  CHECK(produced > trials * 0.95);
  CHECK(counts[TreeMove::Grow] / static_cast<double>(produced) ==
        doctest::Approx(0.28).epsilon(0.08));
  CHECK(counts[TreeMove::Prune] / static_cast<double>(produced) ==
        doctest::Approx(0.28).epsilon(0.08));
  CHECK(counts[TreeMove::Change] / static_cast<double>(produced) ==
        doctest::Approx(0.44).epsilon(0.08));
}

TEST_CASE("single-leaf sweep draws the conjugate posterior") {
  // one unique feature value: no split is ever possible, so the leaf mean is
  // the only sampled quantity and follows its closed-form full conditional
  const int n = 25;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 1);
  auto data = std::make_shared<const BartData>(make_bart_data(X));
  BartHyper hyper;
  hyper.M = 1;
  hyper.sigma_mu = 0.4;
  Forest forest(data, hyper);

  SeededRng gen(33, 0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 0.8 + 0.3 * sample_normal(gen);

  const double s = y.sum();
  const double s2m = hyper.sigma_mu * hyper.sigma_mu;
  const double post_mean = s * s2m / (1.0 + n * s2m);
  const double post_var = s2m / (1.0 + n * s2m);

  SeededRng rng(34, 0);
  const int draws = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < draws; ++t) {
    forest.sweep(rng, y, 1.0);
    const double mu = forest.training_fits()(0);
    sum += mu;
    sumsq += mu * mu;
  }
  const double mean = sum / draws;
  const double var = sumsq / draws - mean * mean;
  const double se = std::sqrt(post_var / draws);
  CHECK(std::abs(mean - post_mean) <= 3.0 * se);
  CHECK(var == doctest::Approx(post_var).epsilon(0.1));
}

TEST_CASE("two-state chain occupancy matches the exact posterior") {
  // one +-1 feature: tree space is {single leaf, one split at 0}
  const int n = 20;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  SeededRng gen(35, 0);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = i < n / 2 ? -1.0 : 1.0;
    y(i) = 0.4 * X(i, 0) + 0.2 * sample_normal(gen);
  }
  auto data = std::make_shared<const BartData>(make_bart_data(X));
  BartHyper hyper;
  hyper.M = 1;
  hyper.sigma_mu = 0.3;

  // exact log posterior of each structure: tree prior + integrated-leaf ML
  const double s2m = hyper.sigma_mu * hyper.sigma_mu;
  auto leaf_ml = [&](double s, int cnt) {
    return 0.5 * std::log(1.0 / (1.0 + cnt * s2m)) +
           s2m * s * s / (2.0 * (1.0 + cnt * s2m));
  };
  RegressionTree t0;
  RegressionTree t1;
  t1.grow(0, 0, 0.0);
  const double sl = y.head(n / 2).sum(), sr = y.tail(n / 2).sum();
  const double lp0 = log_tree_prior(hyper, t0, *data) + leaf_ml(sl + sr, n);
  const double lp1 = log_tree_prior(hyper, t1, *data) + leaf_ml(sl, n / 2) + leaf_ml(sr, n / 2);
  const double pi0 = 1.0 / (1.0 + std::exp(lp1 - lp0));

  Forest forest(data, hyper);
  SeededRng rng(36, 0);
  const int warm = 2000, iters = 60000;
  int at0 = 0;
  for (int t = 0; t < warm + iters; ++t) {
    forest.sweep(rng, y, 1.0);
    if (t >= warm && forest.trees()[0].n_leaves() == 1) ++at0;
  }
  CHECK(at0 / static_cast<double>(iters) == doctest::Approx(pi0).epsilon(0.05));
}

TEST_CASE("cached fits stay consistent with a full recomputation") {
  SeededRng rng(37, 0);
  const int n = 120;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = sample_normal(rng);
    X(i, 1) = sample_normal(rng);
    y(i) = std::sin(X(i, 0)) + 0.3 * sample_normal(rng);
  }
  auto data = std::make_shared<const BartData>(make_bart_data(X));
  BartHyper hyper;
  hyper.M = 20;
  Forest forest(data, hyper);
  for (int t = 0; t < 50; ++t) forest.sweep(rng, y, 1.0);
  const Eigen::VectorXd cached = forest.training_fits();
  const Eigen::VectorXd fresh = forest.recompute_training_fits();
  CHECK((cached - fresh).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(forest.acceptance_rate() > 0.0);

  // the ensemble actually learned the smooth signal
  double sse = 0.0, sst = 0.0;
  const double ybar = y.mean();
  for (int i = 0; i < n; ++i) {
    sse += std::pow(y(i) - cached(i), 2);
    sst += std::pow(y(i) - ybar, 2);
  }
  CHECK(sse < sst);
}

TEST_CASE("variance draw matches IG moments") {
  SeededRng rng(38, 0);
  BartHyper hyper;
  hyper.nu = 3.0;
  hyper.lambda = 1.2;
  Eigen::VectorXd r(50);
  for (int i = 0; i < 50; ++i) r(i) = sample_normal(rng);
  const double shape = (hyper.nu + 50) / 2.0;
  const double rate = (hyper.nu * hyper.lambda + r.squaredNorm()) / 2.0;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_variance(rng, r, hyper);
  CHECK(sum / n == doctest::Approx(rate / (shape - 1.0)).epsilon(0.03));
}
