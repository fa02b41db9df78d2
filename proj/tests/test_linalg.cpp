#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/linalg.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coresketch;

TEST_CASE("thin_svd identity") {
  DenseMatrix a = DenseMatrix::Identity(3, 3);
  ThinSVD svd = thin_svd(a);
  for (int i = 0; i < 3; ++i) CHECK(svd.sigma[i] == doctest::Approx(1.0));
  CHECK((svd.reconstruct() - a).norm() < 1e-12);
}

TEST_CASE("thin_svd diagonal with sign convention") {
  DenseMatrix a = DenseMatrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  ThinSVD svd = thin_svd(a);
  CHECK(svd.sigma[0] == doctest::Approx(3.0));
  CHECK(svd.sigma[1] == doctest::Approx(2.0));
  CHECK(svd.sigma[2] == doctest::Approx(1.0));
  CHECK((svd.U - DenseMatrix::Identity(3, 3)).norm() < 1e-12);
  CHECK((svd.V - DenseMatrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("thin_svd reconstruction and orthogonality on random input") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    DenseMatrix a = tu::random_matrix(50, 10, seed);
    ThinSVD svd = thin_svd(a);
    CHECK((svd.reconstruct() - a).norm() / a.norm() <= 1e-10);
    CHECK((svd.U.transpose() * svd.U - DenseMatrix::Identity(svd.U.cols(), svd.U.cols())).norm() <
          1e-8);
    CHECK((svd.V.transpose() * svd.V - DenseMatrix::Identity(svd.V.cols(), svd.V.cols())).norm() <
          1e-8);
    for (Index i = 1; i < svd.sigma.size(); ++i) CHECK(svd.sigma[i - 1] >= svd.sigma[i]);
  }
}

TEST_CASE("thin_svd rejects non-finite input") {
  DenseMatrix a = DenseMatrix::Zero(2, 2);
  a(0, 1) = std::nan("");
  CHECK_THROWS_AS(thin_svd(a), ContractError);
}

TEST_CASE("pseudoinverse basics") {
  CHECK((pseudoinverse(DenseMatrix::Identity(4, 4)) - DenseMatrix::Identity(4, 4)).norm() <
        1e-12);
  CHECK(pseudoinverse(DenseMatrix::Zero(3, 2)).norm() == 0.0);

  DenseMatrix a = tu::random_matrix(20, 5, 7);
  DenseMatrix pinv = pseudoinverse(a);
  CHECK((pinv * a - DenseMatrix::Identity(5, 5)).norm() < 1e-8);
  // Penrose identities
  CHECK((a * pinv * a - a).norm() / a.norm() < 1e-8);
  CHECK((pinv * a * pinv - pinv).norm() / pinv.norm() < 1e-8);
  CHECK(((a * pinv).transpose() - a * pinv).norm() < 1e-8);
  CHECK(((pinv * a).transpose() - pinv * a).norm() < 1e-8);
}

TEST_CASE("best_rank_k residuals") {
  DenseMatrix l = tu::random_matrix(12, 2, 3), r = tu::random_matrix(9, 2, 4);
  DenseMatrix rank2 = l * r.transpose();
  CHECK((best_rank_k(rank2, 2) - rank2).norm() <= 1e-10 * rank2.norm());

  DenseMatrix diag = DenseMatrix::Zero(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  diag(2, 2) = 1.0;
  CHECK((diag - best_rank_k(diag, 1)).squaredNorm() == doctest::Approx(5.0));

  DenseMatrix a = tu::random_matrix(30, 30, 5);
  ThinSVD svd = thin_svd(a);
  const double resid = (a - best_rank_k(a, 5)).squaredNorm();
  CHECK(resid == doctest::Approx(tail_energy(svd.sigma, 5)).epsilon(1e-8));

  CHECK_THROWS_AS(best_rank_k(a, 31), ContractError);
}

TEST_CASE("gaussian_sketch determinism and concentration") {
  DenseMatrix g1 = gaussian_sketch(16, 8, 42);
  DenseMatrix g2 = gaussian_sketch(16, 8, 42);
  CHECK((g1 - g2).norm() == 0.0);
  CHECK((g1 - gaussian_sketch(16, 8, 43)).norm() > 0.0);

  DenseMatrix g = gaussian_sketch(256, 1000, 11);
  for (Index j = 0; j < g.cols(); ++j) {
    const double s = g.col(j).squaredNorm();
    CHECK(s > 0.5);
    CHECK(s < 1.5);
  }

  // m = 1: each entry is a standard normal
  DenseMatrix row = gaussian_sketch(1, 20000, 5);
  const double mean = row.sum() / row.size();
  const double var = row.squaredNorm() / row.size() - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
