#include "odtr/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace odtr {

namespace {

constexpr double kCutLow = -0.43;
constexpr double kCutHigh = 0.43;
constexpr double kTieTol = 1e-10;

}  // namespace

ScenarioSpec ScenarioSpec::get(int id) {
  ScenarioSpec s;
  s.id = id;
  auto linear = [&](double d1, double d2, std::array<double, 6> beta,
                    std::vector<double> zeta) {
    s.has_delta = true;
    s.delta1 = d1;
    s.delta2 = d2;
    s.beta2 = beta;
    s.zeta2 = std::move(zeta);
    s.form = ScenarioForm::Linear;
  };
  switch (id) {
    case 1: linear(0.5, 0.5, {0, 0, 0, 0, 0, 0}, {0, 0, 0}); break;
    case 2: linear(0.5, 0.5, {0, 0, 0, 0, 0, 0.10}, {0, 0, 0}); break;
    case 3: linear(0.5, 0.5, {0, 0, -0.5, 0, 0, 0.5}, {0, 0.5, 0}); break;
    case 4: linear(0.5, 0.5, {0, 0, -0.5, 0, 0, 0.5}, {0, 0.49, 0}); break;
    case 5: linear(1.0, 0.0, {0, 0, -0.5, 0, 0, 1.0}, {0, 0.5, 0.5}); break;
    case 6: linear(0.1, 0.1, {0, 0, -0.5, 0, 0, 0.25}, {0, 0.5, 0.5}); break;
    case 7: linear(0.1, 0.1, {0, 0, -0.25, 0, 0, 0.75}, {0, 0.5, 0.5}); break;
    case 8: linear(0.0, 0.0, {0, 0, 0, 0, 0, 0.25}, {0, 0.25, 0}); break;
    case 9: linear(0.0, 0.0, {0, 0, 0, 0, 0, 0.25}, {0, 0.24, 0}); break;
    case 10:
      s.beta2 = {0, 0.20, 0.20, -0.30, 0.10, -0.20};
      s.zeta2 = {0.20};
      s.form = ScenarioForm::Squared;
      break;
    case 11:
    case 12:
      s.beta2 = {0, 0.40, -0.20, -1.00, 0.40, -0.70};
      s.zeta2 = {1.00};
      s.form = ScenarioForm::SinCos;
      s.confounded = (id == 12);
      break;
    default:
      throw std::invalid_argument("ScenarioSpec: id must be 1..12");
  }
  return s;
}

double ScenarioSpec::latent_mean(double x11, int a1, double x21, int a2) const {
  const auto& b = beta2;
  switch (form) {
    case ScenarioForm::Linear:
      return b[0] + b[1] * x11 + b[2] * a1 + b[3] * x11 * a1 + b[4] * x21 + b[5] * a2 +
             a2 * (zeta2[0] * x11 + zeta2[1] * a1 + zeta2[2] * x21);
    case ScenarioForm::Squared:
      return b[0] + b[1] * x11 * x11 + b[2] * a1 + b[3] * x11 * x11 * a1 +
             b[4] * x21 * x21 + b[5] * a2 + zeta2[0] * a2 * x21 * x21;
    case ScenarioForm::SinCos:
      return b[0] + b[1] * std::sin(x11) + b[2] * a1 + b[3] * std::sin(x11) * a1 +
             b[4] * std::cos(x21) + b[5] * a2 + zeta2[0] * a2 * std::cos(x21);
  }
  return 0.0;
}

double ScenarioSpec::psi2(double x11, int a1, double x21) const {
  switch (form) {
    case ScenarioForm::Linear:
      return 2.0 * (beta2[5] + zeta2[0] * x11 + zeta2[1] * a1 + zeta2[2] * x21);
    case ScenarioForm::Squared:
      return 2.0 * (beta2[5] + zeta2[0] * x21 * x21);
    case ScenarioForm::SinCos:
      return 2.0 * (beta2[5] + zeta2[0] * std::cos(x21));
  }
  return 0.0;
}

Simplex ScenarioSpec::category_probs(double x11, int a1, double x21, int a2) const {
  const double mu = latent_mean(x11, a1, x21, a2);
  const double p1 = normal_cdf(kCutLow - mu);
  const double p12 = normal_cdf(kCutHigh - mu);
  return Simplex({p1, p12 - p1, 1.0 - p12});
}

double ScenarioSpec::prob_top(double x11, int a1, double x21, int a2) const {
  return 1.0 - normal_cdf(kCutHigh - latent_mean(x11, a1, x21, a2));
}

TwoStageDataset generate(const ScenarioSpec& spec, int n, SeededRng& rng) {
  if (n < 1) throw std::invalid_argument("generate: n < 1");
  TwoStageDataset data;
  data.n_categories = 3;
  data.x1_names = {"x11", "x12", "x13", "x14", "x15", "x16"};
  data.x2_names = {"x21"};
  data.trajectories.reserve(static_cast<std::size_t>(n));
  const bool binary = spec.binary_covariates();
  for (int i = 0; i < n; ++i) {
    Trajectory t;
    t.x1.resize(static_cast<std::size_t>(1 + spec.n_noise));
    t.x1[0] = binary ? static_cast<double>(sample_signed_bernoulli(rng, 0.5))
                     : sample_normal(rng);
    for (int j = 1; j <= spec.n_noise; ++j) t.x1[static_cast<std::size_t>(j)] = sample_normal(rng);
    t.a1 = spec.confounded
               ? sample_signed_bernoulli(rng, expit(0.2 * t.x1[0] + 0.5))
               : sample_signed_bernoulli(rng, 0.5);
    double x21;
    if (binary) {
      x21 = sample_signed_bernoulli(rng, expit(spec.delta1 * t.x1[0] + spec.delta2 * t.a1));
    } else {
      x21 = sample_normal(rng);
    }
    t.x2 = {x21};
    t.a2 = spec.confounded
               ? sample_signed_bernoulli(rng, expit(0.2 * t.x1[0] + 0.3 * x21 + 0.5))
               : sample_signed_bernoulli(rng, 0.5);
    const double z = spec.latent_mean(t.x1[0], t.a1, x21, t.a2) + sample_normal(rng);
    t.y2 = z <= kCutLow ? 1 : (z <= kCutHigh ? 2 : 3);
    data.trajectories.push_back(std::move(t));
  }
  return data;
}

namespace {

struct CellTerms {
  double logp, du, dl, huu, hul, hll;
};

CellTerms cell_terms(double lower, double upper) {
  CellTerms t{};
  const double P = std::max(normal_interval_prob(lower, upper), 1e-300);
  t.logp = std::log(P);
  const double A = std::isfinite(upper) ? normal_pdf(upper) : 0.0;
  const double B = std::isfinite(lower) ? normal_pdf(lower) : 0.0;
  const double uA = std::isfinite(upper) ? upper * A : 0.0;
  const double lB = std::isfinite(lower) ? lower * B : 0.0;
  t.du = A / P;
  t.dl = -B / P;
  t.huu = (-uA * P - A * A) / (P * P);
  t.hll = (lB * P - B * B) / (P * P);
  t.hul = (A * B) / (P * P);
  return t;
}

double gamma_at(const std::vector<double>& interior, int k, int K) {
  if (k <= 0) return -std::numeric_limits<double>::infinity();
  if (k >= K) return std::numeric_limits<double>::infinity();
  return interior[static_cast<std::size_t>(k - 1)];
}

double saturated_nll(const Eigen::MatrixXd& probs, const Eigen::VectorXd& w,
                     const Eigen::VectorXd& means, const std::vector<double>& interior) {
  const int C = static_cast<int>(probs.rows());
  const int K = static_cast<int>(probs.cols());
  double nll = 0.0;
  for (int c = 0; c < C; ++c) {
    for (int k = 1; k <= K; ++k) {
      const double pk = probs(c, k - 1);
      if (pk <= 0.0) continue;
      const CellTerms t = cell_terms(gamma_at(interior, k - 1, K) - means(c),
                                     gamma_at(interior, k, K) - means(c));
      nll -= w(c) * pk * t.logp;
    }
  }
  return nll;
}

}  // namespace

SaturatedProbitFit fit_saturated_probit(const Eigen::MatrixXd& cell_probs,
                                        const Eigen::VectorXd& weights) {
  const int C = static_cast<int>(cell_probs.rows());
  const int K = static_cast<int>(cell_probs.cols());
  if (C < 1 || K < 2) throw std::invalid_argument("fit_saturated_probit: bad shape");
  if (weights.size() != C) throw std::invalid_argument("fit_saturated_probit: weights");

  auto clamp01 = [](double p) { return std::min(std::max(p, 1e-12), 1.0 - 1e-12); };
  Eigen::VectorXd means(C);
  for (int c = 0; c < C; ++c) means(c) = -normal_quantile(clamp01(cell_probs(c, 0)));
  std::vector<double> interior(static_cast<std::size_t>(K - 1), 0.0);
  for (int k = 2; k <= K - 1; ++k) {
    double acc = 0.0;
    for (int c = 0; c < C; ++c) {
      double cum = 0.0;
      for (int j = 0; j < k; ++j) cum += cell_probs(c, j);
      acc += normal_quantile(clamp01(cum)) + means(c);
    }
    interior[static_cast<std::size_t>(k - 1)] =
        std::max(acc / C, interior[static_cast<std::size_t>(k - 2)] + 1e-6);
  }

  double nll = saturated_nll(cell_probs, weights, means, interior);
  for (int round = 0; round < 2000; ++round) {
    double max_grad = 0.0;
    // cell means, one Newton step each
    for (int c = 0; c < C; ++c) {
      double g = 0.0, h = 0.0;
      for (int k = 1; k <= K; ++k) {
        const double pk = cell_probs(c, k - 1);
        if (pk <= 0.0) continue;
        const CellTerms t = cell_terms(gamma_at(interior, k - 1, K) - means(c),
                                       gamma_at(interior, k, K) - means(c));
        g += weights(c) * pk * (t.du + t.dl);
        h -= weights(c) * pk * (t.huu + 2.0 * t.hul + t.hll);
      }
      max_grad = std::max(max_grad, std::abs(g));
      if (h <= 0.0) continue;
      double step = -g / h;
      for (int ls = 0; ls < 40; ++ls) {
        Eigen::VectorXd cand = means;
        cand(c) += step;
        const double v = saturated_nll(cell_probs, weights, cand, interior);
        if (v <= nll) {
          means = cand;
          nll = v;
          break;
        }
        step *= 0.5;
      }
    }
    // free cutpoints gamma_2 .. gamma_{K-1}
    for (int k = 2; k <= K - 1; ++k) {
      double g = 0.0, h = 0.0;
      for (int c = 0; c < C; ++c) {
        const double pk = cell_probs(c, k - 1), pk1 = cell_probs(c, k);
        const CellTerms tk = cell_terms(gamma_at(interior, k - 1, K) - means(c),
                                        gamma_at(interior, k, K) - means(c));
        const CellTerms tk1 = cell_terms(gamma_at(interior, k, K) - means(c),
                                         gamma_at(interior, k + 1, K) - means(c));
        g -= weights(c) * (pk * tk.du + pk1 * tk1.dl);
        h -= weights(c) * (pk * tk.huu + pk1 * tk1.hll);
      }
      max_grad = std::max(max_grad, std::abs(g));
      if (h <= 0.0) continue;
      double step = -g / h;
      const double lo = gamma_at(interior, k - 1, K);
      const double hi = gamma_at(interior, k + 1, K);
      for (int ls = 0; ls < 40; ++ls) {
        const double cand = interior[static_cast<std::size_t>(k - 1)] + step;
        if (cand > lo && cand < hi) {
          std::vector<double> ci = interior;
          ci[static_cast<std::size_t>(k - 1)] = cand;
          const double v = saturated_nll(cell_probs, weights, means, ci);
          if (v <= nll) {
            interior = std::move(ci);
            nll = v;
            break;
          }
        }
        step *= 0.5;
      }
    }
    if (max_grad < 1e-12) break;
  }
  SaturatedProbitFit fit;
  fit.means = means;
  fit.cut_interior = interior;
  return fit;
}

namespace {

// Exact pseudo-outcome distribution at one (x11, a1) cell: the stage-2
// outcome distribution under the true optimal a2, with X21 integrated out.
Eigen::RowVector3d pseudo_cell(const ScenarioSpec& spec, double x11, int a1,
                               const std::vector<double>& x21_draws) {
  Eigen::RowVector3d out = Eigen::RowVector3d::Zero();
  auto add = [&](double x21, double w) {
    const double psi = spec.psi2(x11, a1, x21);
    const int a2 = optimal_action(psi, kTieTol).action;
    const Simplex p = spec.category_probs(x11, a1, x21, a2);
    out(0) += w * p[0];
    out(1) += w * p[1];
    out(2) += w * p[2];
  };
  if (spec.binary_covariates()) {
    const double p21 = expit(spec.delta1 * x11 + spec.delta2 * a1);
    add(1.0, p21);
    add(-1.0, 1.0 - p21);
  } else {
    const double w = 1.0 / static_cast<double>(x21_draws.size());
    for (double x21 : x21_draws) add(x21, w);
  }
  return out;
}

struct Psi1Oracle {
  bool binary = true;
  double psi_minus = 0.0, psi_plus = 0.0;  // x11 = -1 / +1
  std::vector<double> grid, values;        // continuous scenarios

  double at(double x11) const {
    if (binary) return x11 > 0.0 ? psi_plus : psi_minus;
    if (x11 <= grid.front()) return values.front();
    if (x11 >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x11);
    const std::size_t j = static_cast<std::size_t>(it - grid.begin());
    const double t = (x11 - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return values[j - 1] + t * (values[j] - values[j - 1]);
  }
};

Psi1Oracle build_psi1_oracle(const ScenarioSpec& spec) {
  Psi1Oracle o;
  if (spec.binary_covariates()) {
    Eigen::MatrixXd cells(4, 3);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
    const std::vector<double> none;
    int c = 0;
    for (double x11 : {-1.0, 1.0}) {
      for (int a1 : {-1, 1}) cells.row(c++) = pseudo_cell(spec, x11, a1, none);
    }
    const SaturatedProbitFit fit = fit_saturated_probit(cells, w);
    o.psi_minus = fit.means(1) - fit.means(0);  // (x11=-1, a1=+1) - (x11=-1, a1=-1)
    o.psi_plus = fit.means(3) - fit.means(2);
    return o;
  }
  o.binary = false;
  const int G = 41;
  o.grid.resize(G);
  for (int g = 0; g < G; ++g) o.grid[static_cast<std::size_t>(g)] = -4.0 + 8.0 * g / (G - 1);
  // fixed-seed Monte Carlo marginalization of X21 ~ N(0,1)
  SeededRng mc(0xC0FFEEu, static_cast<std::uint64_t>(spec.id));
  std::vector<double> x21_draws(1000000);
  for (double& v : x21_draws) v = sample_normal(mc);
  Eigen::MatrixXd cells(2 * G, 3);
  Eigen::VectorXd w(2 * G);
  for (int g = 0; g < G; ++g) {
    const double x11 = o.grid[static_cast<std::size_t>(g)];
    cells.row(2 * g) = pseudo_cell(spec, x11, -1, x21_draws);
    cells.row(2 * g + 1) = pseudo_cell(spec, x11, 1, x21_draws);
    w(2 * g) = w(2 * g + 1) = normal_pdf(x11);
  }
  w /= w.sum();
  const SaturatedProbitFit fit = fit_saturated_probit(cells, w);
  o.values.resize(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    o.values[static_cast<std::size_t>(g)] = fit.means(2 * g + 1) - fit.means(2 * g);
  }
  return o;
}

const Psi1Oracle& psi1_oracle(const ScenarioSpec& spec) {
  static std::mutex mu;
  static std::map<int, Psi1Oracle> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(spec.id);
  if (it == cache.end()) it = cache.emplace(spec.id, build_psi1_oracle(spec)).first;
  return it->second;
}

}  // namespace

double true_psi1(const ScenarioSpec& spec, double x11) {
  return psi1_oracle(spec).at(x11);
}

SimTruth compute_truth(const ScenarioSpec& spec, const TwoStageDataset& test) {
  const std::size_t n = test.size();
  SimTruth truth;
  truth.psi1.resize(static_cast<Eigen::Index>(n));
  truth.psi2.resize(static_cast<Eigen::Index>(n));
  truth.act1.resize(n);
  truth.act2.resize(n);
  truth.tie1.resize(n);
  truth.tie2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Trajectory& t = test.trajectories[i];
    const double p2 = spec.psi2(t.x1[0], t.a1, t.x2[0]);
    const double p1 = true_psi1(spec, t.x1[0]);
    truth.psi2(static_cast<Eigen::Index>(i)) = p2;
    truth.psi1(static_cast<Eigen::Index>(i)) = p1;
    const ActionChoice c2 = optimal_action(p2, kTieTol);
    const ActionChoice c1 = optimal_action(p1, kTieTol);
    truth.act2[i] = c2.action;
    truth.tie2[i] = c2.tie;
    truth.act1[i] = c1.action;
    truth.tie1[i] = c1.tie;
  }
  return truth;
}

std::vector<Trajectory> build_eval_queries(const ScenarioSpec& spec,
                                           const TwoStageDataset& test) {
  std::vector<Trajectory> q = test.trajectories;
  const bool binary = spec.binary_covariates();
  for (const Trajectory& t : test.trajectories) {
    for (int a1 : {1, -1}) {
      if (binary) {
        for (double x21 : {1.0, -1.0}) {
          Trajectory c = t;
          c.a1 = a1;
          c.x2 = {x21};
          q.push_back(std::move(c));
        }
      } else {
        Trajectory c = t;
        c.a1 = a1;
        q.push_back(std::move(c));
      }
    }
  }
  return q;
}

namespace {

struct StageAccum {
  double bias = 0.0, mse = 0.0, pot = 0.0;
  double cover = 0.0;
  int cover_n = 0;
};

void accumulate(StageAccum& a, double est, double tru, const ActionChoice& est_act,
                int true_act, bool true_tie, bool has_interval, double lo, double hi) {
  const double d = est - tru;
  a.bias += d;
  a.mse += d * d;
  if (true_tie || est_act.action == true_act) a.pot += 1.0;
  if (has_interval) {
    a.cover += (lo <= tru && tru <= hi) ? 1.0 : 0.0;
    ++a.cover_n;
  }
}

}  // namespace

MetricsReport evaluate(const ScenarioSpec& spec, const DtrFitResult& fit,
                       const SimTruth& truth, const TwoStageDataset& test) {
  const Eigen::Index n = static_cast<Eigen::Index>(test.size());
  if (truth.psi2.size() != n || fit.psi2_query.point.size() < n) {
    throw std::invalid_argument("evaluate: fit/truth/test misaligned");
  }
  const bool binary = spec.binary_covariates();
  const Eigen::Index expected =
      n + (binary ? 4 : 2) * n;
  if (fit.psi2_query.point.size() != expected) {
    throw std::invalid_argument("evaluate: query layout mismatch");
  }
  const bool has2 = fit.psi2_query.lo.size() == fit.psi2_query.point.size();
  const bool has1 = fit.psi1_query.lo.size() == fit.psi1_query.point.size();

  StageAccum s1, s2;
  double vt2 = 0.0, ve2 = 0.0, vo = 0.0, vt1 = 0.0, ve1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Trajectory& t = test.trajectories[static_cast<std::size_t>(i)];
    const std::size_t si = static_cast<std::size_t>(i);
    accumulate(s2, fit.psi2_query.point(i), truth.psi2(i),
               ActionChoice{fit.action2_query[si], false}, truth.act2[si], truth.tie2[si],
               has2, has2 ? fit.psi2_query.lo(i) : 0.0, has2 ? fit.psi2_query.hi(i) : 0.0);
    accumulate(s1, fit.psi1_query.point(i), truth.psi1(i),
               ActionChoice{fit.action1_query[si], false}, truth.act1[si], truth.tie1[si],
               has1, has1 ? fit.psi1_query.lo(i) : 0.0, has1 ? fit.psi1_query.hi(i) : 0.0);

    const double x11 = t.x1[0];
    const double x21 = t.x2[0];
    // stage-2 value: observed a1, rule applied at stage 2 only
    vt2 += spec.prob_top(x11, t.a1, x21, truth.act2[si]);
    ve2 += spec.prob_top(x11, t.a1, x21, fit.action2_query[si]);
    vo += spec.prob_top(x11, t.a1, x21, t.a2);

    // stage-1 value: the regime (d1, d2) applied jointly
    auto joint_true = [&](int a1) {
      if (binary) {
        const double p21 = expit(spec.delta1 * x11 + spec.delta2 * a1);
        double v = 0.0;
        for (double x : {1.0, -1.0}) {
          const int a2 = optimal_action(spec.psi2(x11, a1, x), kTieTol).action;
          v += (x > 0 ? p21 : 1.0 - p21) * spec.prob_top(x11, a1, x, a2);
        }
        return v;
      }
      const int a2 = optimal_action(spec.psi2(x11, a1, x21), kTieTol).action;
      return spec.prob_top(x11, a1, x21, a2);
    };
    vt1 += joint_true(truth.act1[si]);

    const int a1e = fit.action1_query[si];
    if (binary) {
      const std::size_t base = static_cast<std::size_t>(n) + 4 * si + (a1e == 1 ? 0 : 2);
      const double p21 = expit(spec.delta1 * x11 + spec.delta2 * a1e);
      ve1 += p21 * spec.prob_top(x11, a1e, 1.0, fit.action2_query[base]) +
             (1.0 - p21) * spec.prob_top(x11, a1e, -1.0, fit.action2_query[base + 1]);
    } else {
      const std::size_t base = static_cast<std::size_t>(n) + 2 * si + (a1e == 1 ? 0 : 1);
      ve1 += spec.prob_top(x11, a1e, x21, fit.action2_query[base]);
    }
  }

  const double dn = static_cast<double>(n);
  MetricsReport r;
  auto finish = [&](StageAccum& a, StageMetrics& m, double vt, double ve) {
    m.bias = a.bias / dn;
    m.mse = a.mse / dn;
    m.pot = a.pot / dn;
    m.coverage = a.cover_n > 0 ? a.cover / a.cover_n
                               : std::numeric_limits<double>::quiet_NaN();
    m.value_true = vt / dn;
    m.value_est = ve / dn;
    m.value_obs = vo / dn;
  };
  finish(s2, r.stage2, vt2, ve2);
  finish(s1, r.stage1, vt1, ve1);
  return r;
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::QLearning: return "qlearning";
    case EstimatorKind::BmlBP: return "bml-bp";
    case EstimatorKind::BmlObart: return "bml-obart";
  }
  return "?";
}

namespace {

struct RepOutcome {
  std::vector<MetricsReport> reports;  // per estimator; valid[] says which
  std::vector<bool> valid;
};

RepOutcome run_replication(const StudyConfig& cfg, const ScenarioSpec& spec, int rep) {
  const std::uint64_t base =
      static_cast<std::uint64_t>(spec.id) * 1000003u + static_cast<std::uint64_t>(rep) * 131u;
  SeededRng gen_tr(cfg.seed, base);
  SeededRng gen_te(cfg.seed, base + 1);
  const TwoStageDataset train = generate(spec, cfg.n_tr, gen_tr);
  const TwoStageDataset test = generate(spec, cfg.n_te, gen_te);
  const SimTruth truth = compute_truth(spec, test);
  const std::vector<Trajectory> queries = build_eval_queries(spec, test);

  RepOutcome out;
  out.reports.resize(cfg.estimators.size());
  out.valid.assign(cfg.estimators.size(), false);
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    SeededRng rng(cfg.seed, base + 10 + e);
    try {
      DtrFitResult fit;
      switch (cfg.estimators[e]) {
        case EstimatorKind::QLearning:
          fit = qlearning_fit(train, queries, cfg.ql, rng);
          break;
        case EstimatorKind::BmlBP: {
          BigSamplerConfig c = cfg.bp;
          c.stage_model = StageModelKind::BP;
          fit = big_sampler_fit(train, queries, c, rng);
          break;
        }
        case EstimatorKind::BmlObart: {
          BigSamplerConfig c = cfg.obart;
          c.stage_model = StageModelKind::Obart;
          fit = big_sampler_fit(train, queries, c, rng);
          break;
        }
      }
      out.reports[e] = evaluate(spec, fit, truth, test);
      out.valid[e] = true;
    } catch (const std::exception&) {
      out.valid[e] = false;
    }
  }
  return out;
}

struct Welford {
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  void add(double v) {
    if (std::isnan(v)) return;
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(); }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

std::vector<StudyRow> run_study(const StudyConfig& cfg) {
  std::vector<StudyRow> rows;
  for (int sc : cfg.scenarios) {
    const ScenarioSpec spec = ScenarioSpec::get(sc);
    std::vector<RepOutcome> outs(static_cast<std::size_t>(cfg.replications));
    const int threads = std::max(1, cfg.threads);
    if (threads == 1) {
      for (int r = 0; r < cfg.replications; ++r) {
        outs[static_cast<std::size_t>(r)] = run_replication(cfg, spec, r);
      }
    } else {
      true_psi1(spec, 0.0);  // build the shared oracle before fan-out
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.replications) break;
          outs[static_cast<std::size_t>(r)] = run_replication(cfg, spec, r);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      for (int stage = 1; stage <= 2; ++stage) {
        Welford bias, cover, mse, pot, vt, ve, vo;
        int failures = 0, used = 0;
        for (const RepOutcome& o : outs) {
          if (!o.valid[e]) {
            ++failures;
            continue;
          }
          const StageMetrics& m = stage == 1 ? o.reports[e].stage1 : o.reports[e].stage2;
          bias.add(m.bias);
          cover.add(m.coverage);
          mse.add(m.mse);
          pot.add(m.pot);
          vt.add(m.value_true);
          ve.add(m.value_est);
          vo.add(m.value_obs);
          ++used;
        }
        StudyRow row;
        row.scenario = sc;
        row.estimator = cfg.estimators[e];
        row.stage = stage;
        row.bias = bias.mean();
        row.cover = cover.mean();
        row.mse = mse.mean();
        row.pot = pot.mean();
        row.value_true = vt.mean();
        row.value_est = ve.mean();
        row.value_obs = vo.mean();
        row.mc_se_bias = bias.se();
        row.mc_se_cover = cover.se();
        row.mc_se_mse = mse.se();
        row.mc_se_pot = pot.se();
        row.mc_se_value_est = ve.se();
        row.replications = used;
        row.failures = failures;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
  std::ostringstream os;
  os << "scenario,method,stage,bias,cover,mse,pot,value_true,value_est,value_obs,"
        "mc_se_bias,mc_se_cover,mc_se_mse,mc_se_pot,mc_se_value_est,replications,failures\n";
  auto num = [&](double v) {
    if (std::isnan(v)) {
      os << "na";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      os << buf;
    }
  };
  for (const StudyRow& r : rows) {
    os << r.scenario << ',' << estimator_name(r.estimator) << ',' << r.stage << ',';
    num(r.bias); os << ',';
    num(r.cover); os << ',';
    num(r.mse); os << ',';
    num(r.pot); os << ',';
    num(r.value_true); os << ',';
    num(r.value_est); os << ',';
    num(r.value_obs); os << ',';
    num(r.mc_se_bias); os << ',';
    num(r.mc_se_cover); os << ',';
    num(r.mc_se_mse); os << ',';
    num(r.mc_se_pot); os << ',';
    num(r.mc_se_value_est); os << ',';
    os << r.replications << ',' << r.failures << '\n';
  }
  return os.str();
}

}  // namespace odtr
