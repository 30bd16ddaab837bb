#include <doctest.h>

#include <cmath>
#include <vector>

#include "odtr/cutpoints.hpp"
#include "odtr/ordered_probit.hpp"
#include "odtr/prob.hpp"

using namespace odtr;

TEST_CASE("CutPoints invariants") {
  CutPoints cut({0.0, 0.8}, /*pin_first=*/true);
  CHECK(cut.n_categories() == 3);
  CHECK(cut.pinned());
  CHECK(cut.gamma(0) == -std::numeric_limits<double>::infinity());
  CHECK(cut.gamma(1) == 0.0);
  CHECK(cut.gamma(2) == 0.8);
  CHECK(cut.gamma(3) == std::numeric_limits<double>::infinity());
  CHECK(cut.strictly_increasing());
  CHECK_THROWS(CutPoints({0.5, 0.5}, false));
}

TEST_CASE("cutpoint_log_posterior equals summed log category probabilities") {
  const CutPoints cut({0.0, 0.7}, true);
  SeededRng rng(3, 0);
  const int n = 50;
  Eigen::VectorXd fits(n);
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    fits(i) = sample_normal(rng);
    labels(i) = 1 + static_cast<int>(rng.uniform_index(3));
  }
  double manual = 0.0;
  for (int i = 0; i < n; ++i) {
    const Simplex p = category_probs_from_latent(fits(i), cut);
    manual += std::log(p[static_cast<std::size_t>(labels(i) - 1)]);
  }
  CHECK(std::abs(cutpoint_log_posterior(cut, fits, labels) - manual) <= 1e-10);
}

TEST_CASE("impossible configuration yields -inf") {
  const CutPoints cut({0.0, 0.7}, true);
  Eigen::VectorXd fits(1);
  fits << 1e9;  // P(Y=1) underflows to zero
  Eigen::VectorXi labels(1);
  labels << 1;
  CHECK(std::isinf(cutpoint_log_posterior(cut, fits, labels)));
}

TEST_CASE("blocked MH matches grid quadrature on the single free cutpoint") {
  // frozen latent means, K = 3: the only free parameter is gamma_2 in (0, inf)
  SeededRng gen(17, 0);
  const int n = 40;
  Eigen::VectorXd fits(n);
  Eigen::VectorXi labels(n);
  const CutPoints truth({0.0, 0.8}, true);
  for (int i = 0; i < n; ++i) {
    fits(i) = sample_normal(gen);
    const double z = fits(i) + sample_normal(gen);
    labels(i) = z <= 0.0 ? 1 : (z <= 0.8 ? 2 : 3);
  }
  // guarantee every category appears
  labels(0) = 1;
  labels(1) = 2;
  labels(2) = 3;

  const double lo = 1e-3, hi = 4.0;
  const int bins = 30;
  auto bin_of = [&](double g) {
    int b = static_cast<int>((g - lo) / (hi - lo) * bins);
    return std::min(std::max(b, 0), bins - 1);
  };

  // quadrature of the target density binned the same way
  std::vector<double> quad(static_cast<std::size_t>(bins), 0.0);
  const int grid = 4000;
  double total = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double x = lo + (hi - lo) * (g + 0.5) / grid;
    CutPoints c({0.0, x}, true);
    const double w = std::exp(cutpoint_log_posterior(c, fits, labels));
    quad[static_cast<std::size_t>(bin_of(x))] += w;
    total += w;
  }
  for (double& q : quad) q /= total;

  // MH chain occupancy
  SeededRng rng(18, 0);
  CutPoints cut({0.0, 0.5}, true);
  std::vector<double> occ(static_cast<std::size_t>(bins), 0.0);
  const int warm = 5000, iters = 120000;
  for (int t = 0; t < warm + iters; ++t) {
    mh_cutpoint_block(rng, cut, fits, labels, 0.3);
    if (t >= warm) occ[static_cast<std::size_t>(bin_of(cut.gamma(2)))] += 1.0;
  }
  for (double& o : occ) o /= iters;

  double tv = 0.0;
  for (int b = 0; b < bins; ++b) {
    tv += std::abs(occ[static_cast<std::size_t>(b)] - quad[static_cast<std::size_t>(b)]);
  }
  tv *= 0.5;
  CHECK(tv < 0.05);
}

TEST_CASE("MH preserves ordering and pin") {
  SeededRng rng(19, 0);
  CutPoints cut({0.0, 0.4, 1.1}, true);  // K = 4, two free cutpoints
  const int n = 60;
  Eigen::VectorXd fits(n);
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    fits(i) = sample_normal(rng);
    labels(i) = 1 + static_cast<int>(rng.uniform_index(4));
  }
  for (int t = 0; t < 2000; ++t) {
    mh_cutpoint_block(rng, cut, fits, labels, 0.2);
    REQUIRE(cut.gamma(1) == 0.0);
    REQUIRE(cut.strictly_increasing());
  }
}
