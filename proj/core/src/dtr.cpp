#include "odtr/dtr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odtr {

ActionChoice optimal_action(double psi, double tie_tol) {
  if (!std::isfinite(psi)) throw std::invalid_argument("optimal_action: psi not finite");
  ActionChoice c;
  c.action = psi > 0.0 ? 1 : -1;
  c.tie = std::abs(psi) <= tie_tol;
  return c;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile_type7: empty");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_type7: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

std::pair<double, double> credible_interval(std::vector<double> draws, double level) {
  if (draws.size() < 2) throw std::invalid_argument("credible_interval: need >= 2 draws");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("credible_interval: level outside (0,1)");
  }
  const double tail = 0.5 * (1.0 - level);
  std::sort(draws.begin(), draws.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(draws.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, draws.size() - 1);
    return draws[lo] + (h - std::floor(h)) * (draws[hi] - draws[lo]);
  };
  return {q(tail), q(1.0 - tail)};
}

int moon_resample_size(int n, double alpha_tune, double p_hat) {
  const double expo = (1.0 + alpha_tune * (1.0 - p_hat)) / (1.0 + alpha_tune);
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(n), expo)));
}

namespace {

double psi_linear(const Eigen::VectorXd& zeta, const Eigen::VectorXd& row) {
  return 2.0 * zeta.dot(row);
}

void fill_interval_columns(StagePsi& s, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi, Eigen::Index offset,
                           Eigen::Index count) {
  s.lo = lo.segment(offset, count);
  s.hi = hi.segment(offset, count);
}

void summarize_draws(StagePsi& s, double level) {
  const Eigen::Index n = s.draws.cols();
  s.point.resize(n);
  s.lo.resize(n);
  s.hi.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<double> col(s.draws.rows());
    for (Eigen::Index r = 0; r < s.draws.rows(); ++r) col[r] = s.draws(r, j);
    s.point(j) = quantile_type7(col, 0.5);
    const auto [lo, hi] = credible_interval(std::move(col), level);
    s.lo(j) = lo;
    s.hi(j) = hi;
  }
}

std::vector<int> actions_from_points(const Eigen::VectorXd& psi) {
  std::vector<int> out(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    out[static_cast<std::size_t>(i)] = optimal_action(psi(i)).action;
  }
  return out;
}

// Core of Algorithm 1: stage-2 MLE plus R^ql-averaged stage-1 MLEs.
struct QlModels {
  ProbitMleResult stage2;
  LinearProbitModel stage1;
};

QlModels ql_core(const TwoStageDataset& data, int r_ql, SeededRng& rng,
                 const LinearProbitModel* warm2, const LinearProbitModel* warm1) {
  const int K = data.n_categories;
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  QlModels out;
  const StageDesign d2 = build_stage2_design(data);
  out.stage2 = fit_mle(d2, K, warm2);

  // per-observation optimal action and (fixed) imputation distribution
  std::vector<int> action(static_cast<std::size_t>(n));
  std::vector<Simplex> impute;
  impute.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = d2.inter_block.row(i);
    const double psi = psi_linear(out.stage2.model.zeta, row);
    action[static_cast<std::size_t>(i)] = optimal_action(psi).action;
    const double f = out.stage2.model.beta.dot(row) +
                     out.stage2.model.zeta.dot(row) * action[static_cast<std::size_t>(i)];
    impute.push_back(category_probs_from_latent(f, out.stage2.model.cut));
  }

  Eigen::VectorXd beta_sum, zeta_sum;
  std::vector<double> cut_sum;
  int cut_reps = 0;
  LinearProbitModel warm = warm1 != nullptr ? *warm1 : LinearProbitModel{};
  bool have_warm = warm1 != nullptr;
  std::vector<int> pseudo(static_cast<std::size_t>(n));
  CutPoints last_cut;
  for (int r = 0; r < r_ql; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
      pseudo[static_cast<std::size_t>(i)] =
          (t.a2 == action[static_cast<std::size_t>(i)])
              ? t.y2
              : sample_multinomial(rng, impute[static_cast<std::size_t>(i)]);
    }
    const StageDesign d1 = build_stage1_design(data, pseudo);
    const ProbitMleResult fit1 = fit_mle(d1, K, have_warm ? &warm : nullptr);
    warm = fit1.model;
    have_warm = true;
    if (r == 0) {
      beta_sum = fit1.model.beta;
      zeta_sum = fit1.model.zeta;
    } else {
      beta_sum += fit1.model.beta;
      zeta_sum += fit1.model.zeta;
    }
    if (fit1.model.cut.n_categories() == K) {
      if (cut_sum.empty()) cut_sum.assign(static_cast<std::size_t>(K - 1), 0.0);
      for (int k = 1; k <= K - 1; ++k) cut_sum[static_cast<std::size_t>(k - 1)] += fit1.model.cut.gamma(k);
      ++cut_reps;
    }
    last_cut = fit1.model.cut;
  }
  out.stage1.beta = beta_sum / static_cast<double>(r_ql);
  out.stage1.zeta = zeta_sum / static_cast<double>(r_ql);
  if (cut_reps > 0) {
    for (double& g : cut_sum) g /= static_cast<double>(cut_reps);
    out.stage1.cut = CutPoints(std::move(cut_sum), /*pin_first=*/false);
  } else {
    out.stage1.cut = last_cut;  // a category vanished in every repetition
  }
  return out;
}

TwoStageDataset resample(const TwoStageDataset& data, int m, SeededRng& rng) {
  TwoStageDataset out;
  out.n_categories = data.n_categories;
  out.x1_names = data.x1_names;
  out.x2_names = data.x2_names;
  out.trajectories.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    out.trajectories.push_back(data.trajectories[rng.uniform_index(data.size())]);
  }
  return out;
}

}  // namespace

MoonIntervals m_out_of_n_bootstrap(const TwoStageDataset& data, const PsiEstimator& est,
                                   const PsiPair& center, Eigen::Index n_train_points,
                                   const BootstrapConfig& cfg, SeededRng& rng) {
  if (cfg.B < 100) throw std::invalid_argument("m_out_of_n_bootstrap: B < 100");
  const int n = static_cast<int>(data.size());
  MoonIntervals out;

  if (cfg.fixed_m) {
    out.m = cfg.m_override > 0 ? cfg.m_override : n;
    out.p_hat = 0.0;
  } else {
    // pilot at m = n estimates the non-regularity proportion p-hat
    const int b_pilot = std::max(20, cfg.B / 5);
    Eigen::MatrixXd pilot(b_pilot, n_train_points);
    int got = 0;
    for (int b = 0; b < b_pilot; ++b) {
      try {
        const PsiPair p = est(resample(data, n, rng), rng);
        pilot.row(got++) = p.psi2.head(n_train_points);
      } catch (const std::exception&) {
        ++out.failures;
      }
    }
    if (got < b_pilot / 2) throw std::runtime_error("m_out_of_n_bootstrap: pilot failed");
    int contain = 0;
    const double tail = 0.5 * (1.0 - cfg.level);
    for (Eigen::Index j = 0; j < n_train_points; ++j) {
      std::vector<double> col(static_cast<std::size_t>(got));
      for (int b = 0; b < got; ++b) col[static_cast<std::size_t>(b)] = pilot(b, j);
      const double lo = quantile_type7(col, tail);
      const double hi = quantile_type7(col, 1.0 - tail);
      if (lo <= 0.0 && hi >= 0.0) ++contain;
    }
    out.p_hat = static_cast<double>(contain) / static_cast<double>(n_train_points);
    out.m = moon_resample_size(n, cfg.alpha_tune, out.p_hat);
  }

  const Eigen::Index q = center.psi1.size();
  Eigen::MatrixXd psi1(cfg.B, q), psi2(cfg.B, q);
  int got = 0;
  for (int b = 0; b < cfg.B; ++b) {
    try {
      const PsiPair p = est(resample(data, out.m, rng), rng);
      psi1.row(got) = p.psi1;
      psi2.row(got) = p.psi2;
      ++got;
    } catch (const std::exception&) {
      ++out.failures;
    }
  }
  if (out.failures > cfg.B / 20) {
    throw std::runtime_error("m_out_of_n_bootstrap: more than 5% of replicates failed");
  }

  const double scale = std::sqrt(static_cast<double>(out.m) / static_cast<double>(n));
  const double tail = 0.5 * (1.0 - cfg.level);
  out.lo1.resize(q); out.hi1.resize(q); out.lo2.resize(q); out.hi2.resize(q);
  std::vector<double> diffs(static_cast<std::size_t>(got));
  for (Eigen::Index j = 0; j < q; ++j) {
    for (int b = 0; b < got; ++b) diffs[static_cast<std::size_t>(b)] = psi1(b, j) - center.psi1(j);
    out.lo1(j) = center.psi1(j) - scale * quantile_type7(diffs, 1.0 - tail);
    out.hi1(j) = center.psi1(j) - scale * quantile_type7(diffs, tail);
    for (int b = 0; b < got; ++b) diffs[static_cast<std::size_t>(b)] = psi2(b, j) - center.psi2(j);
    out.lo2(j) = center.psi2(j) - scale * quantile_type7(diffs, 1.0 - tail);
    out.hi2(j) = center.psi2(j) - scale * quantile_type7(diffs, tail);
  }
  return out;
}

DtrFitResult qlearning_fit(const TwoStageDataset& data,
                           const std::vector<Trajectory>& queries,
                           const QLearningConfig& cfg, SeededRng& rng) {
  data.validate();
  if (cfg.r_ql < 1) throw std::invalid_argument("qlearning_fit: r_ql < 1");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(queries.size());

  const QlModels models = ql_core(data, cfg.r_ql, rng, nullptr, nullptr);

  DtrFitResult res;
  res.kind = EstimatorKind::QLearning;
  res.repetitions_used = cfg.r_ql;
  res.stage2_model = models.stage2.model;
  res.stage1_model = models.stage1;

  auto psi_at = [&](const LinearProbitModel& m, const Eigen::VectorXd& row) {
    return psi_linear(m.zeta, row);
  };
  res.psi2_train.point.resize(n);
  res.psi1_train.point.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
    res.psi2_train.point(i) = psi_at(models.stage2.model, stage2_row(t.x1, t.a1, t.x2));
    res.psi1_train.point(i) = psi_at(models.stage1, stage1_row(t.x1));
  }
  res.psi2_query.point.resize(nq);
  res.psi1_query.point.resize(nq);
  for (Eigen::Index j = 0; j < nq; ++j) {
    const Trajectory& t = queries[static_cast<std::size_t>(j)];
    res.psi2_query.point(j) = psi_at(models.stage2.model, stage2_row(t.x1, t.a1, t.x2));
    res.psi1_query.point(j) = psi_at(models.stage1, stage1_row(t.x1));
  }
  res.action1_train = actions_from_points(res.psi1_train.point);
  res.action2_train = actions_from_points(res.psi2_train.point);
  res.action1_query = actions_from_points(res.psi1_query.point);
  res.action2_query = actions_from_points(res.psi2_query.point);

  if (cfg.do_bootstrap) {
    const LinearProbitModel warm2 = models.stage2.model;
    const LinearProbitModel warm1 = models.stage1;
    PsiEstimator est = [&](const TwoStageDataset& sample, SeededRng& r) {
      const QlModels m = ql_core(sample, cfg.r_ql, r, &warm2, &warm1);
      PsiPair p;
      p.psi1.resize(n + nq);
      p.psi2.resize(n + nq);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
        p.psi2(i) = psi_at(m.stage2.model, stage2_row(t.x1, t.a1, t.x2));
        p.psi1(i) = psi_at(m.stage1, stage1_row(t.x1));
      }
      for (Eigen::Index j = 0; j < nq; ++j) {
        const Trajectory& t = queries[static_cast<std::size_t>(j)];
        p.psi2(n + j) = psi_at(m.stage2.model, stage2_row(t.x1, t.a1, t.x2));
        p.psi1(n + j) = psi_at(m.stage1, stage1_row(t.x1));
      }
      return p;
    };
    PsiPair center;
    center.psi1.resize(n + nq);
    center.psi2.resize(n + nq);
    center.psi1 << res.psi1_train.point, res.psi1_query.point;
    center.psi2 << res.psi2_train.point, res.psi2_query.point;
    const MoonIntervals mi = m_out_of_n_bootstrap(data, est, center, n, cfg.bootstrap, rng);
    fill_interval_columns(res.psi1_train, mi.lo1, mi.hi1, 0, n);
    fill_interval_columns(res.psi2_train, mi.lo2, mi.hi2, 0, n);
    fill_interval_columns(res.psi1_query, mi.lo1, mi.hi1, n, nq);
    fill_interval_columns(res.psi2_query, mi.lo2, mi.hi2, n, nq);
    res.bootstrap_m = mi.m;
    res.bootstrap_p_hat = mi.p_hat;
    res.bootstrap_failures = mi.failures;
  }
  return res;
}

namespace {

std::vector<Eigen::Index> select_evenly(Eigen::Index available, int wanted) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(wanted));
  for (int r = 0; r < wanted; ++r) {
    idx[static_cast<std::size_t>(r)] =
        (static_cast<Eigen::Index>(r) + 1) * available / wanted - 1;
  }
  return idx;
}

DtrFitResult big_sampler_bp(const TwoStageDataset& data,
                            const std::vector<Trajectory>& queries,
                            const BigSamplerConfig& cfg, SeededRng& rng) {
  const int K = data.n_categories;
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(queries.size());
  const int s1 = cfg.s1_draws > 0 ? cfg.s1_draws : 500;

  const StageDesign d2 = build_stage2_design(data);
  const ProbitPosterior post2 =
      gibbs_fit(d2, K, cfg.s2_draws, cfg.s2_burnin, rng, cfg.probit);
  const Eigen::Index navail = static_cast<Eigen::Index>(post2.draws.size());
  if (navail < cfg.r_bml) {
    throw std::invalid_argument("big_sampler_fit: fewer stage-2 draws than R^bml");
  }
  const std::vector<Eigen::Index> sel = select_evenly(navail, cfg.r_bml);

  DtrFitResult res;
  res.kind = EstimatorKind::BmlBP;
  res.repetitions_used = cfg.r_bml;
  res.stage2_acceptance = post2.acceptance_rate;

  // fixed evaluation rows
  std::vector<Eigen::VectorXd> h2_train(static_cast<std::size_t>(n)),
      h1_train(static_cast<std::size_t>(n)), h2_query(static_cast<std::size_t>(nq)),
      h1_query(static_cast<std::size_t>(nq));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
    h2_train[static_cast<std::size_t>(i)] = stage2_row(t.x1, t.a1, t.x2);
    h1_train[static_cast<std::size_t>(i)] = stage1_row(t.x1);
  }
  for (Eigen::Index j = 0; j < nq; ++j) {
    const Trajectory& t = queries[static_cast<std::size_t>(j)];
    h2_query[static_cast<std::size_t>(j)] = stage2_row(t.x1, t.a1, t.x2);
    h1_query[static_cast<std::size_t>(j)] = stage1_row(t.x1);
  }

  // stage-2 summaries use every retained post-burnin draw; thinning to R^bml
  // here would only coarsen the tail quantiles of the credible intervals
  res.psi2_train.draws.resize(navail, n);
  res.psi2_query.draws.resize(navail, nq);
  res.psi1_train.draws.resize(cfg.r_bml, n);
  res.psi1_query.draws.resize(cfg.r_bml, nq);
  for (Eigen::Index d = 0; d < navail; ++d) {
    const ProbitDraw& draw = post2.draws[static_cast<std::size_t>(d)];
    res.stage2_draws.push_back(draw);
    for (Eigen::Index i = 0; i < n; ++i) {
      res.psi2_train.draws(d, i) = psi_linear(draw.zeta, h2_train[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index j = 0; j < nq; ++j) {
      res.psi2_query.draws(d, j) = psi_linear(draw.zeta, h2_query[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<int> pseudo(static_cast<std::size_t>(n));
  double acc1_sum = 0.0;
  for (int r = 0; r < cfg.r_bml; ++r) {
    const Eigen::Index d = sel[static_cast<std::size_t>(r)];
    const ProbitDraw& draw = post2.draws[static_cast<std::size_t>(d)];
    // impute this draw's stage-1 dataset
    for (Eigen::Index i = 0; i < n; ++i) {
      const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
      const int act = optimal_action(res.psi2_train.draws(d, i)).action;
      if (t.a2 == act) {
        pseudo[static_cast<std::size_t>(i)] = t.y2;
      } else {
        const Eigen::VectorXd& row = h2_train[static_cast<std::size_t>(i)];
        const double f = draw.beta.dot(row) + draw.zeta.dot(row) * act;
        pseudo[static_cast<std::size_t>(i)] =
            sample_multinomial(rng, category_probs_from_latent(f, draw.cut));
      }
    }
    const StageDesign d1 = build_stage1_design(data, pseudo);
    ProbitPosterior chain;
    try {
      chain = gibbs_fit(d1, K, s1, s1 - 1, rng, cfg.probit);
    } catch (const std::exception&) {
      chain = gibbs_fit(d1, K, s1, s1 - 1, rng, cfg.probit);  // one retry, fresh stream state
    }
    acc1_sum += chain.acceptance_rate;
    const ProbitDraw& one = chain.draws.back();
    res.stage1_draws.push_back(one);
    for (Eigen::Index i = 0; i < n; ++i) {
      res.psi1_train.draws(r, i) = psi_linear(one.zeta, h1_train[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index j = 0; j < nq; ++j) {
      res.psi1_query.draws(r, j) = psi_linear(one.zeta, h1_query[static_cast<std::size_t>(j)]);
    }
  }
  res.stage1_acceptance = acc1_sum / static_cast<double>(cfg.r_bml);

  summarize_draws(res.psi1_train, cfg.level);
  summarize_draws(res.psi2_train, cfg.level);
  summarize_draws(res.psi1_query, cfg.level);
  summarize_draws(res.psi2_query, cfg.level);
  res.action1_train = actions_from_points(res.psi1_train.point);
  res.action2_train = actions_from_points(res.psi2_train.point);
  res.action1_query = actions_from_points(res.psi1_query.point);
  res.action2_query = actions_from_points(res.psi2_query.point);
  return res;
}

DtrFitResult big_sampler_obart(const TwoStageDataset& data,
                               const std::vector<Trajectory>& queries,
                               const BigSamplerConfig& cfg, SeededRng& rng) {
  const int K = data.n_categories;
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index nq = static_cast<Eigen::Index>(queries.size());
  const int s1 = cfg.s1_draws > 0 ? cfg.s1_draws : 600;
  const Eigen::Index p1 = static_cast<Eigen::Index>(data.x1_names.size());
  const Eigen::Index p2 = static_cast<Eigen::Index>(data.x2_names.size());

  // stage-2 features (x1, a1, x2, a2); counterfactual a2 = +-1 query rows for
  // training and query trajectories
  Eigen::MatrixXd X2(n, p1 + 1 + p2 + 1);
  Eigen::VectorXi y2(n);
  Eigen::MatrixXd Q2(2 * (n + nq), p1 + 1 + p2 + 1);
  auto fill_h2 = [&](Eigen::Index row, const Trajectory& t, double a2) {
    for (Eigen::Index j = 0; j < p1; ++j) Q2(row, j) = t.x1[static_cast<std::size_t>(j)];
    Q2(row, p1) = static_cast<double>(t.a1);
    for (Eigen::Index j = 0; j < p2; ++j) Q2(row, p1 + 1 + j) = t.x2[static_cast<std::size_t>(j)];
    Q2(row, p1 + 1 + p2) = a2;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p1; ++j) X2(i, j) = t.x1[static_cast<std::size_t>(j)];
    X2(i, p1) = static_cast<double>(t.a1);
    for (Eigen::Index j = 0; j < p2; ++j) X2(i, p1 + 1 + j) = t.x2[static_cast<std::size_t>(j)];
    X2(i, p1 + 1 + p2) = static_cast<double>(t.a2);
    y2(i) = t.y2;
    fill_h2(2 * i, t, 1.0);
    fill_h2(2 * i + 1, t, -1.0);
  }
  for (Eigen::Index j = 0; j < nq; ++j) {
    const Trajectory& t = queries[static_cast<std::size_t>(j)];
    fill_h2(2 * (n + j), t, 1.0);
    fill_h2(2 * (n + j) + 1, t, -1.0);
  }

  const ObartPosterior post2 =
      obart_fit(X2, y2, K, Q2, cfg.s2_draws, cfg.s2_burnin, rng, cfg.obart);
  const Eigen::Index navail = static_cast<Eigen::Index>(post2.draws.size());
  if (navail < cfg.r_bml) {
    throw std::invalid_argument("big_sampler_fit: fewer stage-2 draws than R^bml");
  }
  const std::vector<Eigen::Index> sel = select_evenly(navail, cfg.r_bml);

  DtrFitResult res;
  res.kind = EstimatorKind::BmlObart;
  res.repetitions_used = cfg.r_bml;
  res.stage2_acceptance = post2.acceptance_rate;
  // stage-2 summaries use every retained post-burnin draw (see BP path)
  res.psi2_train.draws.resize(navail, n);
  res.psi2_query.draws.resize(navail, nq);
  res.psi1_train.draws.resize(cfg.r_bml, n);
  res.psi1_query.draws.resize(cfg.r_bml, nq);
  for (Eigen::Index d = 0; d < navail; ++d) {
    const ObartDraw& draw = post2.draws[static_cast<std::size_t>(d)];
    for (Eigen::Index i = 0; i < n; ++i) {
      res.psi2_train.draws(d, i) = draw.query_fits(2 * i) - draw.query_fits(2 * i + 1);
    }
    for (Eigen::Index j = 0; j < nq; ++j) {
      res.psi2_query.draws(d, j) =
          draw.query_fits(2 * (n + j)) - draw.query_fits(2 * (n + j) + 1);
    }
  }

  // stage-1 features (x1, a1); counterfactual a1 = +-1 query rows
  Eigen::MatrixXd Q1(2 * (n + nq), p1 + 1);
  auto fill_h1 = [&](Eigen::Index row, const std::vector<double>& x1, double a1) {
    for (Eigen::Index j = 0; j < p1; ++j) Q1(row, j) = x1[static_cast<std::size_t>(j)];
    Q1(row, p1) = a1;
  };
  Eigen::MatrixXd X1(n, p1 + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p1; ++j) X1(i, j) = t.x1[static_cast<std::size_t>(j)];
    X1(i, p1) = static_cast<double>(t.a1);
    fill_h1(2 * i, t.x1, 1.0);
    fill_h1(2 * i + 1, t.x1, -1.0);
  }
  for (Eigen::Index j = 0; j < nq; ++j) {
    fill_h1(2 * (n + j), queries[static_cast<std::size_t>(j)].x1, 1.0);
    fill_h1(2 * (n + j) + 1, queries[static_cast<std::size_t>(j)].x1, -1.0);
  }

  Eigen::VectorXi pseudo(n);
  double acc1_sum = 0.0;
  for (int r = 0; r < cfg.r_bml; ++r) {
    const Eigen::Index d = sel[static_cast<std::size_t>(r)];
    const ObartDraw& draw = post2.draws[static_cast<std::size_t>(d)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const Trajectory& t = data.trajectories[static_cast<std::size_t>(i)];
      const int act = optimal_action(res.psi2_train.draws(d, i)).action;
      if (t.a2 == act) {
        pseudo(i) = t.y2;
      } else {
        const double f = draw.query_fits(act == 1 ? 2 * i : 2 * i + 1);
        pseudo(i) = sample_multinomial(rng, category_probs_from_latent(f, draw.cut));
      }
    }
    ObartPosterior chain;
    try {
      chain = obart_fit(X1, pseudo, K, Q1, s1, s1 - 1, rng, cfg.obart);
    } catch (const std::exception&) {
      chain = obart_fit(X1, pseudo, K, Q1, s1, s1 - 1, rng, cfg.obart);  // one retry
    }
    acc1_sum += chain.acceptance_rate;
    const ObartDraw& one = chain.draws.back();
    for (Eigen::Index i = 0; i < n; ++i) {
      res.psi1_train.draws(r, i) = one.query_fits(2 * i) - one.query_fits(2 * i + 1);
    }
    for (Eigen::Index j = 0; j < nq; ++j) {
      res.psi1_query.draws(r, j) =
          one.query_fits(2 * (n + j)) - one.query_fits(2 * (n + j) + 1);
    }
  }
  res.stage1_acceptance = acc1_sum / static_cast<double>(cfg.r_bml);

  summarize_draws(res.psi1_train, cfg.level);
  summarize_draws(res.psi2_train, cfg.level);
  summarize_draws(res.psi1_query, cfg.level);
  summarize_draws(res.psi2_query, cfg.level);
  res.action1_train = actions_from_points(res.psi1_train.point);
  res.action2_train = actions_from_points(res.psi2_train.point);
  res.action1_query = actions_from_points(res.psi1_query.point);
  res.action2_query = actions_from_points(res.psi2_query.point);
  return res;
}

}  // namespace

DtrFitResult big_sampler_fit(const TwoStageDataset& data,
                             const std::vector<Trajectory>& queries,
                             const BigSamplerConfig& cfg, SeededRng& rng) {
  data.validate();
  if (cfg.r_bml < 1) throw std::invalid_argument("big_sampler_fit: r_bml < 1");
  return cfg.stage_model == StageModelKind::BP ? big_sampler_bp(data, queries, cfg, rng)
                                               : big_sampler_obart(data, queries, cfg, rng);
}

}  // namespace odtr
