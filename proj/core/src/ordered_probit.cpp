#include "odtr/ordered_probit.hpp"

#include <cmath>
#include <stdexcept>

#include "odtr/errors.hpp"

namespace odtr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSeparationGuard = 20.0;

// Combined coefficient design: [main columns | interaction columns * a].
// `drop_main_intercept` selects the classical MLE parameterization.
Eigen::MatrixXd combined_design(const StageDesign& d, bool drop_main_intercept) {
  const Eigen::Index n = d.main_block.rows();
  const Eigen::Index pm = d.main_block.cols() - (drop_main_intercept ? 1 : 0);
  const Eigen::Index pi = d.inter_block.cols();
  Eigen::MatrixXd X(n, pm + pi);
  X.leftCols(pm) = d.main_block.rightCols(pm);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i).tail(pi) = d.inter_block.row(i) * static_cast<double>(d.treatment(i));
  }
  return X;
}

struct CollapseResult {
  Eigen::VectorXi labels;
  int K;
  std::vector<int> collapsed;
};

CollapseResult collapse_empty_categories(const Eigen::VectorXi& labels, int K) {
  std::vector<int> counts(static_cast<std::size_t>(K) + 1, 0);
  for (Eigen::Index i = 0; i < labels.size(); ++i) counts[labels(i)]++;
  std::vector<int> remap(static_cast<std::size_t>(K) + 1, 0);
  CollapseResult out;
  int next = 0;
  for (int k = 1; k <= K; ++k) {
    if (counts[k] > 0) {
      ++next;
      remap[k] = next;
    } else {
      // merge into the lower neighbor (or the first observed category)
      remap[k] = std::max(next, 1);
      out.collapsed.push_back(k);
    }
  }
  out.K = next;
  if (out.K < 2) throw std::invalid_argument("ordered probit: fewer than 2 observed categories");
  out.labels = labels;
  for (Eigen::Index i = 0; i < labels.size(); ++i) out.labels(i) = remap[labels(i)];
  return out;
}

// Log-likelihood pieces for one observation; sentinel-aware.
struct ObsTerms {
  double logp;
  double du, dl;          // d logP / du, d logP / dl
  double huu, hul, hll;   // second partials
};

ObsTerms obs_terms(double lower, double upper) {
  ObsTerms t{};
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

}  // namespace

double LinearProbitModel::latent_mean(const Eigen::VectorXd& h_main,
                                      const Eigen::VectorXd& h_inter, int a) const {
  if (h_main.size() != beta.size() || h_inter.size() != zeta.size()) {
    throw std::invalid_argument("LinearProbitModel: feature dimension mismatch");
  }
  return beta.dot(h_main) + zeta.dot(h_inter) * static_cast<double>(a);
}

Simplex category_probs_from_latent(double latent_mean, const CutPoints& cut) {
  const int K = cut.n_categories();
  std::vector<double> probs(static_cast<std::size_t>(K));
  double total = 0.0;
  for (int k = 1; k <= K; ++k) {
    double p = normal_interval_prob(cut.gamma(k - 1) - latent_mean,
                                    cut.gamma(k) - latent_mean);
    probs[static_cast<std::size_t>(k - 1)] = p;
    total += p;
  }
  // renormalize away the last-ulp drift so the Simplex invariant holds
  for (double& p : probs) p /= total;
  return Simplex(std::move(probs));
}

Simplex LinearProbitModel::category_probs(const Eigen::VectorXd& h_main,
                                          const Eigen::VectorXd& h_inter, int a) const {
  return category_probs_from_latent(latent_mean(h_main, h_inter, a), cut);
}

namespace {

// Negative log-likelihood with analytic gradient and Hessian in the natural
// space xi = (coefs, gamma_1..gamma_{K-1}).
class ProbitObjective {
 public:
  ProbitObjective(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, int K)
      : X_(X), y_(y), K_(K), pc_(X.cols()), dim_(pc_ + K - 1) {}

  int dim() const { return static_cast<int>(dim_); }
  int pc() const { return static_cast<int>(pc_); }

  double value(const Eigen::VectorXd& coefs, const std::vector<double>& gamma) const {
    const Eigen::VectorXd f = X_ * coefs;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      const int yi = y_(i);
      const double upper = (yi == K_) ? kInf : gamma[yi - 1] - f(i);
      const double lower = (yi == 1) ? -kInf : gamma[yi - 2] - f(i);
      const double P = normal_interval_prob(lower, upper);
      if (!(P > 0.0)) return kInf;
      nll -= std::log(P);
    }
    return nll;
  }

  // Fills gradient and Hessian of the NLL in xi space.
  double derivatives(const Eigen::VectorXd& coefs, const std::vector<double>& gamma,
                     Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    grad.setZero(dim_);
    hess.setZero(dim_, dim_);
    const Eigen::VectorXd f = X_ * coefs;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      const int yi = y_(i);
      const double upper = (yi == K_) ? kInf : gamma[yi - 1] - f(i);
      const double lower = (yi == 1) ? -kInf : gamma[yi - 2] - f(i);
      const ObsTerms t = obs_terms(lower, upper);
      nll -= t.logp;
      const auto x = X_.row(i);
      const double dlogp_df = -(t.du + t.dl);
      // gradient (of the NLL, hence the sign flips)
      grad.head(pc_) -= dlogp_df * x.transpose();
      if (yi <= K_ - 1) grad(pc_ + yi - 1) -= t.du;
      if (yi >= 2) grad(pc_ + yi - 2) -= t.dl;
      // Hessian blocks; du/dc = dl/dc = -x
      const double w_cc = t.huu + 2.0 * t.hul + t.hll;
      hess.topLeftCorner(pc_, pc_) -= w_cc * (x.transpose() * x);
      if (yi <= K_ - 1) {
        const Eigen::Index g = pc_ + yi - 1;
        hess.col(g).head(pc_) += (t.huu + t.hul) * x.transpose();
        hess(g, g) -= t.huu;
      }
      if (yi >= 2) {
        const Eigen::Index g = pc_ + yi - 2;
        hess.col(g).head(pc_) += (t.hul + t.hll) * x.transpose();
        hess(g, g) -= t.hll;
      }
      if (yi <= K_ - 1 && yi >= 2) {
        hess(pc_ + yi - 1, pc_ + yi - 2) -= t.hul;
      }
    }
    // symmetrize
    hess.triangularView<Eigen::StrictlyUpper>() =
        hess.transpose().triangularView<Eigen::StrictlyUpper>();
    return nll;
  }

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXi& y_;
  int K_;
  Eigen::Index pc_;
  Eigen::Index dim_;
};

std::vector<double> gammas_from_theta(const Eigen::VectorXd& theta, int pc, int K) {
  std::vector<double> gamma(static_cast<std::size_t>(K - 1));
  gamma[0] = theta(pc);
  for (int k = 2; k <= K - 1; ++k) {
    gamma[k - 1] = gamma[k - 2] + std::exp(theta(pc + k - 1));
  }
  return gamma;
}

}  // namespace

ProbitMleResult fit_mle(const StageDesign& design, int n_categories,
                        const LinearProbitModel* warm_start) {
  const CollapseResult cr = collapse_empty_categories(design.labels, n_categories);
  const int K = cr.K;
  const Eigen::MatrixXd X = combined_design(design, /*drop_main_intercept=*/true);
  const Eigen::Index n = X.rows();
  const Eigen::Index pc = X.cols();
  if (n <= pc + K - 1) throw std::invalid_argument("fit_mle: more parameters than rows");

  ProbitObjective obj(X, cr.labels, K);
  const int dim = obj.dim();

  // theta = [coefs, gamma_1, log-increments]
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  if (warm_start != nullptr && warm_start->cut.n_categories() == K &&
      static_cast<Eigen::Index>(warm_start->beta.size() - 1 + warm_start->zeta.size()) == pc) {
    theta.head(warm_start->beta.size() - 1) = warm_start->beta.tail(warm_start->beta.size() - 1);
    theta.segment(warm_start->beta.size() - 1, warm_start->zeta.size()) = warm_start->zeta;
    theta(pc) = warm_start->cut.gamma(1);
    for (int k = 2; k <= K - 1; ++k) {
      theta(pc + k - 1) = std::log(warm_start->cut.gamma(k) - warm_start->cut.gamma(k - 1));
    }
  } else {
    // cutpoints from empirical cumulative frequencies
    std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) counts[cr.labels(i) - 1] += 1.0;
    double cum = 0.0;
    std::vector<double> g(static_cast<std::size_t>(K - 1));
    for (int k = 1; k <= K - 1; ++k) {
      cum += counts[k - 1];
      g[k - 1] = normal_quantile(cum / static_cast<double>(n));
    }
    theta(pc) = g[0];
    for (int k = 2; k <= K - 1; ++k) theta(pc + k - 1) = std::log(g[k - 1] - g[k - 2]);
  }

  Eigen::VectorXd grad_xi(dim);
  Eigen::MatrixXd hess_xi(dim, dim);
  double nll = kInf;
  int iter = 0;
  const int max_iter = 200;
  for (; iter < max_iter; ++iter) {
    const std::vector<double> gamma = gammas_from_theta(theta, static_cast<int>(pc), K);
    const Eigen::VectorXd coefs = theta.head(pc);
    nll = obj.derivatives(coefs, gamma, grad_xi, hess_xi);

    // chain rule xi -> theta
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim, dim);
    for (int k = 2; k <= K - 1; ++k) {
      const double e = std::exp(theta(pc + k - 1));
      for (int m = k; m <= K - 1; ++m) J(pc + m - 1, pc + k - 1) = (m >= k) ? e : 0.0;
    }
    Eigen::VectorXd grad = J.transpose() * grad_xi;
    Eigen::MatrixXd hess = J.transpose() * hess_xi * J;
    for (int j = 2; j <= K - 1; ++j) {
      const double e = std::exp(theta(pc + j - 1));
      double s = 0.0;
      for (int k = j; k <= K - 1; ++k) s += grad_xi(pc + k - 1);
      hess(pc + j - 1, pc + j - 1) += s * e;
    }

    if (grad.norm() <= 1e-6) break;

    // Newton step with Levenberg fallback and backtracking line search
    Eigen::VectorXd step;
    double tau = 0.0;
    for (;;) {
      Eigen::MatrixXd h = hess;
      if (tau > 0.0) h.diagonal().array() += tau;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        step = ldlt.solve(-grad);
        if (step.allFinite() && step.dot(grad) < 0.0) break;
      }
      if (iter == 0 && tau == 0.0) {
        // a singular Hessian at the start means collinear design columns
        Eigen::LDLT<Eigen::MatrixXd> probe(hess.topLeftCorner(pc, pc));
        Eigen::VectorXd d = probe.vectorD();
        if (d.minCoeff() < 1e-10 * std::max(1.0, d.maxCoeff())) {
          throw std::invalid_argument("fit_mle: design matrix is rank deficient");
        }
      }
      tau = (tau == 0.0) ? 1e-4 * hess.diagonal().array().abs().maxCoeff() : tau * 10.0;
      if (!std::isfinite(tau) || tau > 1e12) {
        throw std::runtime_error("fit_mle: cannot find a descent direction");
      }
    }
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd cand = theta + alpha * step;
      const double v = obj.value(cand.head(pc), gammas_from_theta(cand, static_cast<int>(pc), K));
      if (v < nll) {
        theta = cand;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;  // flat within line-search resolution; gradient check below
  }
  {
    const std::vector<double> gamma = gammas_from_theta(theta, static_cast<int>(pc), K);
    nll = obj.derivatives(theta.head(pc), gamma, grad_xi, hess_xi);
    if (grad_xi.norm() > 1e-4 * std::max(1.0, nll)) {
      throw std::runtime_error("fit_mle: Newton iteration did not converge");
    }
  }

  ProbitMleResult out;
  const Eigen::Index pm_full = design.main_block.cols();
  const Eigen::Index pi = design.inter_block.cols();
  out.model.beta = Eigen::VectorXd::Zero(pm_full);
  out.model.beta.tail(pm_full - 1) = theta.head(pm_full - 1);
  out.model.zeta = theta.segment(pm_full - 1, pi);
  {
    std::vector<double> gamma = gammas_from_theta(theta, static_cast<int>(pc), K);
    out.model.cut = CutPoints(std::move(gamma), /*pin_first=*/false);
  }
  out.log_likelihood = -nll;
  out.iterations = iter;
  out.collapsed_categories = cr.collapsed;
  out.separation_warning = theta.head(pc).array().abs().maxCoeff() > kSeparationGuard;
  Eigen::LDLT<Eigen::MatrixXd> info(hess_xi);
  out.covariance = info.solve(Eigen::MatrixXd::Identity(dim, dim));
  return out;
}

ProbitPosterior gibbs_fit(const StageDesign& design, int n_categories, int n_draws,
                          int burn_in, SeededRng& rng, const ProbitGibbsConfig& config) {
  if (burn_in < 0 || n_draws <= burn_in) {
    throw std::invalid_argument("gibbs_fit: need n_draws > burn_in >= 0");
  }
  const CollapseResult cr = collapse_empty_categories(design.labels, n_categories);
  const int K = cr.K;
  const Eigen::MatrixXd X = combined_design(design, /*drop_main_intercept=*/false);
  const Eigen::Index n = X.rows();
  const Eigen::Index pc = X.cols();

  // constant posterior precision (unit latent variance)
  const double prior_prec = 1.0 / (config.coef_prior_sd * config.coef_prior_sd);
  Eigen::MatrixXd precision = X.transpose() * X;
  precision.diagonal().array() += prior_prec;
  const Eigen::LLT<Eigen::MatrixXd> chol(precision);
  if (chol.info() != Eigen::Success) {
    throw std::invalid_argument("gibbs_fit: singular posterior precision");
  }

  // empirical-frequency cutpoint initialization with gamma_1 pinned at 0
  std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) counts[cr.labels(i) - 1] += 1.0;
  std::vector<double> g(static_cast<std::size_t>(K - 1));
  double cum = 0.0;
  const double q1 = normal_quantile(counts[0] / static_cast<double>(n));
  for (int k = 1; k <= K - 1; ++k) {
    cum += counts[k - 1];
    g[k - 1] = normal_quantile(cum / static_cast<double>(n)) - q1;
  }
  CutPoints cut(std::move(g), /*pin_first=*/true);

  Eigen::VectorXd coefs = Eigen::VectorXd::Zero(pc);
  coefs(0) = -q1;  // intercept consistent with the pinning convention
  Eigen::VectorXd z(n), fits(n);
  double sigma_mh = config.sigma_mh > 0.0 ? config.sigma_mh : 0.5 / static_cast<double>(K);

  ProbitPosterior post;
  post.burn_in = burn_in;
  post.draws.reserve(static_cast<std::size_t>(n_draws - burn_in));
  long accepted = 0, proposed = 0;
  long window_accepted = 0, window_proposed = 0;
  int guard_streak = 0;
  const Eigen::Index pm_full = design.main_block.cols();

  for (int t = 0; t < n_draws; ++t) {
    fits.noalias() = X * coefs;
    // latent utilities
    for (Eigen::Index i = 0; i < n; ++i) {
      const int yi = cr.labels(i);
      z(i) = sample_truncated_normal(rng, fits(i), cut.gamma(yi - 1), cut.gamma(yi));
    }
    // conjugate coefficient draw
    Eigen::VectorXd rhs = X.transpose() * z;
    Eigen::VectorXd mean = chol.solve(rhs);
    Eigen::VectorXd noise(pc);
    for (Eigen::Index j = 0; j < pc; ++j) noise(j) = sample_normal(rng);
    coefs = mean + chol.matrixU().solve(noise);
    // cutpoints
    fits.noalias() = X * coefs;
    if (K > 2) {
      const bool acc = mh_cutpoint_block(rng, cut, fits, cr.labels, sigma_mh);
      ++proposed;
      ++window_proposed;
      if (acc) {
        ++accepted;
        ++window_accepted;
      }
    }
    if (config.adapt_sigma_mh && t < burn_in && window_proposed >= 100) {
      const double rate = static_cast<double>(window_accepted) / window_proposed;
      if (rate > 0.5) sigma_mh *= 1.2;
      if (rate < 0.25) sigma_mh *= 0.8;
      window_proposed = window_accepted = 0;
    }
    if (coefs.array().abs().maxCoeff() > config.divergence_guard) {
      if (++guard_streak > 100) throw DivergenceError("gibbs_fit: chain diverged");
    } else {
      guard_streak = 0;
    }
    if (t >= burn_in) {
      ProbitDraw d;
      d.beta = coefs.head(pm_full);
      d.zeta = coefs.tail(pc - pm_full);
      d.cut = cut;
      post.draws.push_back(std::move(d));
    }
  }
  post.acceptance_rate = proposed > 0 ? static_cast<double>(accepted) / proposed : 1.0;
  return post;
}

}  // namespace odtr
