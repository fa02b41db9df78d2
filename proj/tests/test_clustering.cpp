#include <cmath>

#include "coresketch/clustering.hpp"
#include "coresketch/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coresketch;

namespace {

// Brute-force sensitivity over a net of candidate center sets (all pairs of
// data points for k = 2), independent of the library's estimates.
Vector brute_sensitivity(const DenseMatrix& pts, Index k, double p) {
  const Index n = pts.rows();
  REQUIRE(k == 2);
  Vector best = Vector::Zero(n);
  for (Index c1 = 0; c1 < n; ++c1)
    for (Index c2 = c1 + 1; c2 < n; ++c2) {
      Vector cost(n);
      double total = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double d1 = (pts.row(i) - pts.row(c1)).norm();
        const double d2 = (pts.row(i) - pts.row(c2)).norm();
        cost[i] = std::pow(std::min(d1, d2), p);
        total += cost[i];
      }
      if (total <= 0.0) continue;
      for (Index i = 0; i < n; ++i) best[i] = std::max(best[i], cost[i] / total);
    }
  return best;
}

}  // namespace

TEST_CASE("bicriteria_centers degenerate cases") {
  // n = k distinct points: every point becomes a center, cost 0
  DenseMatrix pts = tu::random_matrix(6, 3, 1);
  CenterSet cs = bicriteria_centers(pts, 6, 2.0, 7);
  CHECK(clustering_cost(pts, cs, 2.0) <= 1e-18);

  // all identical points
  DenseMatrix same = DenseMatrix::Ones(50, 4);
  CenterSet one = bicriteria_centers(same, 3, 2.0, 8);
  CHECK(clustering_cost(same, one, 2.0) == 0.0);
}

TEST_CASE("bicriteria_centers beats the planted cost up to a constant") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tu::PlantedClusters inst = tu::planted_clusters(600, 6, 4, 6.0, 0.5, 100 + seed);
    CenterSet cs = bicriteria_centers(inst.points, 4, 2.0, seed);
    if (clustering_cost(inst.points, cs, 2.0) <= 8.0 * inst.within_cost_p2) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("estimate_sum contract") {
  QueryLedger ledger;
  CHECK(estimate_sum({0.0, 0.0, 0.0}, 0.3, 0.1, ledger, 1) == 0.0);
  std::vector<double> ones(100, 1.0);
  CHECK(estimate_sum(ones, 0.3, 0.1, ledger, 1) == 100.0);

  const double q = std::ceil(ledger.budget_constant * std::sqrt(3.0) * std::log(10.0) / 0.3) +
                   std::ceil(ledger.budget_constant * std::sqrt(100.0) * std::log(10.0) / 0.3);
  CHECK(ledger.simulated_quantum_queries == static_cast<std::uint64_t>(q));

  CHECK_THROWS_AS(estimate_sum({1.0, -0.5}, 0.3, 0.1, ledger, 1), ContractError);

  const double eps = 0.4;
  for (int t = 0; t < 1000; ++t) {
    QueryLedger l2;
    const double got = estimate_sum(ones, eps, 0.1, l2, static_cast<std::uint64_t>(t), true);
    CHECK(got >= (1.0 - eps) * 100.0);
    CHECK(got <= (1.0 + eps) * 100.0);
  }
}

TEST_CASE("estimate_cluster_sizes contract") {
  tu::PlantedClusters inst = tu::planted_clusters(200, 3, 2, 8.0, 0.4, 3);
  CenterSet cs;
  cs.p = 2.0;
  cs.centers = inst.centers;
  PartitionOracle part = PartitionOracle::build(inst.points, cs);

  QueryLedger ledger;
  auto est = estimate_cluster_sizes(part, 2, 0.3, 0.1, ledger, 1);
  CHECK(est[0] + est[1] == 200.0);

  // single cluster covers everything
  CenterSet single;
  single.p = 2.0;
  single.centers = inst.centers.topRows(1);
  PartitionOracle p1 = PartitionOracle::build(inst.points, single);
  auto est1 = estimate_cluster_sizes(p1, 1, 0.3, 0.1, ledger, 2);
  CHECK(est1[0] == 200.0);

  // stress keeps every estimate inside the advertised band
  for (int t = 0; t < 200; ++t) {
    QueryLedger l2;
    auto se = estimate_cluster_sizes(part, 2, 0.3, 0.1, l2, static_cast<std::uint64_t>(t), true);
    for (std::size_t j = 0; j < 2; ++j) {
      const double truth = (j == 0) ? est[0] : est[1];
      CHECK(se[j] >= (1.0 - 0.3) * truth);
      CHECK(se[j] <= (1.0 + 0.3) * truth);
    }
  }

  // an empty cluster estimates to zero and the sensitivity guard handles it
  CenterSet far;
  far.p = 2.0;
  far.centers = DenseMatrix(2, 3);
  far.centers.row(0) = inst.centers.row(0);
  far.centers.row(1) = Vector::Constant(3, 1e6).transpose();
  PartitionOracle pf = PartitionOracle::build(inst.points, far);
  auto estf = estimate_cluster_sizes(pf, 2, 0.3, 0.1, ledger, 3);
  CHECK(estf[1] == 0.0);
}

TEST_CASE("qcluster trivial when the target covers everything") {
  DenseMatrix pts = tu::random_matrix(40, 3, 5);
  QueryLedger ledger;
  WeightedSubset ws = qcluster(pts, 2, 2.0, 0.5, ledger, 1);
  CHECK(ws.size() == 40);
  for (double w : ws.weights) CHECK(w == 1.0);
}

TEST_CASE("qcluster coreset preserves clustering costs") {
  tu::PlantedClusters inst = tu::planted_clusters(4096, 6, 4, 6.0, 0.5, 11);
  QueryLedger ledger;
  WeightedSubset ws = qcluster(inst.points, 4, 2.0, 0.5, ledger, 21);
  REQUIRE(ws.size() > 0);
  REQUIRE(ws.size() < 4096);

  // coreset points are a subset of the input with positive weights
  for (std::size_t i = 0; i < ws.indices.size(); ++i) {
    CHECK(ws.indices[i] < 4096);
    CHECK(ws.weights[i] > 0.0);
  }

  DenseMatrix sub(ws.size(), 6);
  Vector wts(ws.size());
  for (Index i = 0; i < ws.size(); ++i) {
    sub.row(i) = inst.points.row(static_cast<Index>(ws.indices[static_cast<std::size_t>(i)]));
    wts[i] = ws.weights[static_cast<std::size_t>(i)];
  }

  tu::RngStream rng(31);
  int ok = 0;
  const int queries = 100;
  for (int t = 0; t < queries; ++t) {
    CenterSet cs;
    cs.p = 2.0;
    cs.centers = DenseMatrix(4, 6);
    for (Index j = 0; j < 4; ++j) {
      const Index pick = static_cast<Index>(rng.next_below(4096));
      cs.centers.row(j) = inst.points.row(pick);
      for (Index c = 0; c < 6; ++c) cs.centers(j, c) += 0.3 * rng.next_gaussian();
    }
    const double full = clustering_cost(inst.points, cs, 2.0);
    const double coreset = tu::clustering_cost(sub, wts, cs.centers, 2.0);
    if (coreset >= 0.5 * full && coreset <= 1.5 * full) ++ok;
  }
  CHECK(ok >= 95);

  // centers optimized on the coreset stay good on the full data
  DenseMatrix centers = tu::lloyd(sub, wts, 4, 20, 41);
  CenterSet fit;
  fit.p = 2.0;
  fit.centers = centers;
  const double fit_cost = clustering_cost(inst.points, fit, 2.0);
  CHECK(fit_cost <= 4.0 * inst.within_cost_p2);
}

TEST_CASE("sensitivity scores dominate the brute-force oracle") {
  tu::PlantedClusters inst = tu::planted_clusters(120, 3, 2, 5.0, 0.6, 17);
  QueryLedger ledger;
  SensitivityScores scores = cluster_sensitivities(inst.points, 2, 2.0, ledger, 5);
  Vector exact = brute_sensitivity(inst.points, 2, 2.0);
  int dominated = 0;
  for (Index i = 0; i < 120; ++i)
    if (scores.scores[i] >= exact[i]) ++dominated;
  CHECK(dominated >= 119);
}

TEST_CASE("duplicating the dataset halves the sensitivities") {
  tu::PlantedClusters inst = tu::planted_clusters(100, 3, 2, 5.0, 0.6, 19);
  DenseMatrix doubled(200, 3);
  doubled.topRows(100) = inst.points;
  doubled.bottomRows(100) = inst.points;

  QueryLedger ledger;
  SensitivityScores single = cluster_sensitivities(inst.points, 2, 2.0, ledger, 5);
  SensitivityScores dup = cluster_sensitivities(doubled, 2, 2.0, ledger, 5);

  int ok = 0;
  for (Index i = 0; i < 100; ++i) {
    const double ratio = dup.scores[i] / single.scores[i];
    if (ratio >= 0.25 && ratio <= 1.0 + 1e-9) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("qdata_selection unbiased at constant loss") {
  tu::PlantedClusters inst = tu::planted_clusters(60, 3, 3, 5.0, 0.0, 23);  // points at centers
  CenterSet cs;
  cs.p = 2.0;
  cs.centers = inst.centers;
  const double c = 2.5;
  auto loss = [&](const Vector&) { return c; };

  double acc = 0.0;
  const int trials = 10000;
  Index queries = 0;
  for (int t = 0; t < trials; ++t) {
    QueryLedger ledger;
    DataSelection sel = qdata_selection(inst.points, cs, loss, Vector(), 0.3, ledger,
                                        static_cast<std::uint64_t>(t));
    queries = sel.loss_queries;
    double est = 0.0;
    for (std::size_t i = 0; i < sel.subset.indices.size(); ++i)
      est += sel.subset.weights[i] * c;
    acc += est;
  }
  CHECK(queries == 3);  // loss touched only at the centers
  const double truth = 60.0 * c;
  CHECK(acc / trials == doctest::Approx(truth).epsilon(0.01));
}

TEST_CASE("qdata_selection zero loss returns the exact-zero certificate") {
  DenseMatrix pts = DenseMatrix::Zero(20, 2);
  CenterSet cs;
  cs.p = 2.0;
  cs.centers = DenseMatrix::Zero(1, 2);
  QueryLedger ledger;
  DataSelection sel = qdata_selection(pts, cs, [](const Vector&) { return 0.0; },
                                      Vector::Zero(1), 0.3, ledger, 1);
  CHECK(sel.exact_zero);
  CHECK(sel.subset.size() == 0);
}

TEST_CASE("qdata_selection estimator bound on planted clusters") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tu::PlantedClusters inst = tu::planted_clusters(2000, 4, 3, 6.0, 0.4, 700 + seed);
    CenterSet cs;
    cs.p = 2.0;
    cs.centers = inst.centers;
    auto loss = [](const Vector& e) { return e.squaredNorm(); };

    // per-cluster smoothness of |l(e) - l(x_j)| <= lambda_j |e - x_j|^2 on
    // the observed radii: |e|^2 - |x|^2 = (e-x).(e+x) bounded via the data
    PartitionOracle part = PartitionOracle::build(inst.points, cs);
    Vector lambda = Vector::Zero(3);
    for (Index i = 0; i < 2000; ++i) {
      const Index j = part.assign[static_cast<std::size_t>(i)];
      const double num = std::abs(inst.points.row(i).squaredNorm() -
                                  cs.centers.row(j).squaredNorm());
      if (part.dist_p[i] > 1e-12) lambda[j] = std::max(lambda[j], num / part.dist_p[i]);
    }

    QueryLedger ledger;
    const double eps = 0.3;
    DataSelection sel =
        qdata_selection(inst.points, cs, loss, lambda, eps, ledger, seed);
    double est = 0.0;
    for (std::size_t i = 0; i < sel.subset.indices.size(); ++i)
      est += sel.subset.weights[i] *
             loss(inst.points.row(static_cast<Index>(sel.subset.indices[i])).transpose());
    double truth = 0.0;
    for (Index i = 0; i < 2000; ++i) truth += loss(inst.points.row(i).transpose());
    double cost_lambda = 0.0;
    for (Index i = 0; i < 2000; ++i)
      cost_lambda += lambda[part.assign[static_cast<std::size_t>(i)]] * part.dist_p[i];
    if (std::abs(truth - est) <= eps * (truth + 2.0 * cost_lambda)) ++ok;
  }
  CHECK(ok >= 9);
}
