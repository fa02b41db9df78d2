#include <Eigen/Eigenvalues>
#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/kernel.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coresketch;

namespace {

KernelSpec rbf_clusters(Index n, Index d, Index k, double gamma, std::uint64_t seed) {
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::kRbf;
  spec.gamma = gamma;
  spec.points = tu::planted_clusters(n, d, k, 4.0, 0.6, seed).points;
  return spec;
}

}  // namespace

TEST_CASE("factored columns charge per materialization") {
  KernelSpec spec = rbf_clusters(32, 4, 2, 0.5, 1);
  FactoredColumns fc(spec, {0, 3, 7}, Vector::Ones(3));
  QueryLedger ledger;
  fc.row(5, ledger);
  CHECK(ledger.kernel_evaluations == 3);
  fc.row(5, ledger);  // cached
  CHECK(ledger.kernel_evaluations == 3);
  fc.row(6, ledger);
  CHECK(ledger.kernel_evaluations == 6);
}

TEST_CASE("qnystrom keeps everything when s = n") {
  KernelSpec spec = rbf_clusters(24, 3, 2, 1.0, 2);
  QueryLedger ledger;
  WeightedSubset ws = qnystrom(spec, 24, 0.1, ledger, 3);
  CHECK(ws.size() == 24);
  for (double w : ws.weights) CHECK(w == 1.0);
}

TEST_CASE("qnystrom near-uniform on orthogonal points under the linear kernel") {
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::kLinear;
  spec.points = DenseMatrix::Identity(32, 32);
  std::vector<int> hits(32, 0);
  int total = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    QueryLedger ledger;
    WeightedSubset ws = qnystrom(spec, 8, 0.1, ledger, seed);
    for (auto idx : ws.indices) ++hits[idx];
    total += static_cast<int>(ws.size());
  }
  const double mean = static_cast<double>(total) / 32.0;
  for (int h : hits) {
    CHECK(h > 0);
    CHECK(std::abs(h - mean) <= 0.8 * mean);
  }
}

TEST_CASE("qnystrom sandwich against the dense kernel") {
  const Index n = 1024, k = 8;
  KernelSpec spec = rbf_clusters(n, 6, k, 0.8, 7);
  QueryLedger ledger;
  WeightedSubset ws = qnystrom(spec, 64, 0.1, ledger, 11);
  REQUIRE(ws.size() >= 8);

  DenseMatrix kfull = spec.dense_free();
  DenseMatrix kd(n, ws.size());
  DenseMatrix kdd(ws.size(), ws.size());
  for (Index j = 0; j < ws.size(); ++j) {
    const Index cj = static_cast<Index>(ws.indices[static_cast<std::size_t>(j)]);
    kd.col(j) = kfull.col(cj);
    for (Index i = 0; i < ws.size(); ++i)
      kdd(i, j) = kfull(static_cast<Index>(ws.indices[static_cast<std::size_t>(i)]), cj);
  }
  DenseMatrix approx = kd * pseudoinverse(kdd) * kd.transpose();

  Eigen::SelfAdjointEigenSolver<DenseMatrix> gap(DenseMatrix(kfull - approx));
  // Nystrom residual of a PSD matrix is PSD
  CHECK(gap.eigenvalues().minCoeff() >= -1e-6 * kfull.norm());

  Eigen::SelfAdjointEigenSolver<DenseMatrix> full(kfull);
  Vector eig = full.eigenvalues();
  double tail = 0.0;
  for (Index i = 0; i < eig.size() - k; ++i) tail += std::max(eig[i], 0.0);
  const double lambda_k = tail / static_cast<double>(k);
  CHECK(gap.eigenvalues().maxCoeff() <= 8.0 * lambda_k);
}

TEST_CASE("qnystrom rejects non-psd kernels") {
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::kCustom;
  spec.points = DenseMatrix::Identity(64, 64);
  spec.custom = [](const Vector& x, const Vector& y) { return -x.dot(y); };
  QueryLedger ledger;
  CHECK_THROWS_AS(qnystrom(spec, 16, 0.1, ledger, 1), ContractError);
}

TEST_CASE("qlowrank_kernel exact-rank and full-rank cases") {
  // linear kernel on rank-k points: K has rank k
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::kLinear;
  spec.points = tu::random_matrix(96, 3, 13);
  QueryLedger ledger;
  FactoredLowRank f = qlowrank_kernel(spec, 3, 0.5, 0.01, ledger, 5);
  DenseMatrix kfull = spec.dense_free();
  CHECK((kfull - f.materialize()).squaredNorm() <= 1e-6 * kfull.squaredNorm());
}

TEST_CASE("qlowrank_kernel meets the tail bound with a sublinear budget") {
  const Index n = 512, k = 8;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    KernelSpec spec = rbf_clusters(n, 8, k, 0.7, 40 + seed);
    QueryLedger ledger;
    FactoredLowRank f = qlowrank_kernel(spec, k, 0.5, 0.01, ledger, seed);

    DenseMatrix kfull = spec.dense_free();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(kfull);
    Vector eig = es.eigenvalues();
    double tail = 0.0;
    for (Index i = 0; i < eig.size() - k; ++i) tail += eig[i] * eig[i];
    const double resid = (kfull - f.materialize()).squaredNorm();
    if (resid <= 1.5 * tail) ++ok;

    const double cap = std::pow(static_cast<double>(n), 1.8);
    CHECK(static_cast<double>(ledger.kernel_evaluations) <= cap);
  }
  CHECK(ok >= 2);
}
