#include "odtr/obart.hpp"

#include <cmath>
#include <stdexcept>

#include "odtr/errors.hpp"

namespace odtr {

ObartPosterior obart_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& labels, int K,
                         const Eigen::MatrixXd& query_rows, int n_draws, int burn_in,
                         SeededRng& rng, const ObartHyper& hyper) {
  const Eigen::Index n = X.rows();
  if (n < 10) throw std::invalid_argument("obart_fit: need at least 10 rows");
  if (labels.size() != n) throw std::invalid_argument("obart_fit: label length mismatch");
  if (burn_in < 0 || n_draws <= burn_in) {
    throw std::invalid_argument("obart_fit: need n_draws > burn_in >= 0");
  }
  if (query_rows.rows() > 0 && query_rows.cols() != X.cols()) {
    throw std::invalid_argument("obart_fit: query dimension mismatch");
  }

  // relabel observed categories to a contiguous 1..K' range
  std::vector<int> counts(static_cast<std::size_t>(K) + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) < 1 || labels(i) > K) {
      throw std::invalid_argument("obart_fit: label outside 1..K");
    }
    counts[static_cast<std::size_t>(labels(i))]++;
  }
  std::vector<int> remap(static_cast<std::size_t>(K) + 1, 0);
  int Kc = 0;
  for (int k = 1; k <= K; ++k) {
    if (counts[static_cast<std::size_t>(k)] > 0) remap[static_cast<std::size_t>(k)] = ++Kc;
    else remap[static_cast<std::size_t>(k)] = std::max(Kc, 1);
  }
  if (Kc < 2) throw std::invalid_argument("obart_fit: fewer than 2 observed categories");
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = remap[static_cast<std::size_t>(labels(i))];

  // cutpoints from empirical cumulative frequencies, gamma_1 pinned at 0
  std::vector<double> freq(static_cast<std::size_t>(Kc), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) freq[static_cast<std::size_t>(y(i) - 1)] += 1.0;
  const double p1 = freq[0] / static_cast<double>(n);
  const double q1 = normal_quantile(p1);
  std::vector<double> g(static_cast<std::size_t>(Kc - 1));
  double cum = 0.0;
  for (int k = 1; k <= Kc - 1; ++k) {
    cum += freq[static_cast<std::size_t>(k - 1)];
    g[static_cast<std::size_t>(k - 1)] =
        normal_quantile(cum / static_cast<double>(n)) - q1;
  }
  CutPoints cut(std::move(g), /*pin_first=*/true);

  const double mu0 = std::isnan(hyper.mu0) ? normal_quantile(1.0 - p1) : hyper.mu0;
  double sigma_mh = hyper.sigma_mh > 0.0 ? hyper.sigma_mh : 0.5 / static_cast<double>(Kc);

  auto data = std::make_shared<const BartData>(make_bart_data(X));
  Forest forest(data, hyper.bart);

  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z(i) = sample_truncated_normal(rng, mu0, cut.gamma(y(i) - 1), cut.gamma(y(i)));
  }

  ObartPosterior post;
  post.burn_in = burn_in;
  post.mu0 = mu0;
  post.draws.reserve(static_cast<std::size_t>(n_draws - burn_in));
  long accepted = 0, proposed = 0, window_accepted = 0, window_proposed = 0;
  int diverged_streak = 0;

  for (int t = 0; t < n_draws; ++t) {
    forest.sweep(rng, z.array() - mu0, 1.0);
    const Eigen::VectorXd fits = forest.training_fits().array() + mu0;
    if (Kc > 2) {
      const bool acc = mh_cutpoint_block(rng, cut, fits, y, sigma_mh);
      ++proposed;
      ++window_proposed;
      if (acc) {
        ++accepted;
        ++window_accepted;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      z(i) = sample_truncated_normal(rng, fits(i), cut.gamma(y(i) - 1), cut.gamma(y(i)));
    }
    if (hyper.adapt_burnin && t < burn_in && window_proposed >= 100) {
      const double rate = static_cast<double>(window_accepted) / window_proposed;
      if (rate > 0.5) sigma_mh *= 1.2;
      if (rate < 0.25) sigma_mh *= 0.8;
      window_proposed = window_accepted = 0;
    }
    if (z.array().abs().maxCoeff() > 50.0) {
      if (++diverged_streak > 50) throw DivergenceError("obart_fit: chain diverged");
    } else {
      diverged_streak = 0;
    }
    if (t >= burn_in) {
      ObartDraw d;
      d.train_fits = fits;
      d.query_fits.resize(query_rows.rows());
      for (Eigen::Index q = 0; q < query_rows.rows(); ++q) {
        d.query_fits(q) = mu0 + forest.predict(query_rows.row(q));
      }
      d.cut = cut;
      if (hyper.store_forests) d.forest = std::make_shared<const Forest>(forest);
      post.draws.push_back(std::move(d));
    }
  }
  post.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / proposed : 1.0;
  return post;
}

std::vector<Simplex> posterior_category_probs_train(const ObartPosterior& post,
                                                    Eigen::Index row) {
  std::vector<Simplex> out;
  out.reserve(post.draws.size());
  for (const ObartDraw& d : post.draws) {
    out.push_back(category_probs_from_latent(d.train_fits(row), d.cut));
  }
  return out;
}

std::vector<Simplex> posterior_category_probs_query(const ObartPosterior& post,
                                                    Eigen::Index row) {
  std::vector<Simplex> out;
  out.reserve(post.draws.size());
  for (const ObartDraw& d : post.draws) {
    out.push_back(category_probs_from_latent(d.query_fits(row), d.cut));
  }
  return out;
}

}  // namespace odtr
