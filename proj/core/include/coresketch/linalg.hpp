#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace coresketch {

// Row-major so the raw buffer is directly the row-major entry list.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative cutoff for numerical rank: sigma_i > kRankTol * sigma_max.
inline constexpr double kRankTol = 1e-10;

struct ThinSVD {
  DenseMatrix U;  // orthonormal columns
  Vector sigma;   // nonincreasing, nonnegative
  DenseMatrix V;  // orthonormal columns

  Index rank() const;
  DenseMatrix reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }
};

// Thin SVD with a fixed sign convention (first nonzero entry of each U column
// nonnegative) so factorizations are reproducible.
ThinSVD thin_svd(const DenseMatrix& a);

DenseMatrix pseudoinverse(const DenseMatrix& a);

// Best rank-k approximation U_k S_k V_k^T. Throws if k is out of range.
DenseMatrix best_rank_k(const DenseMatrix& a, Index k);

// m x n matrix of i.i.d. N(0, 1/m) entries, deterministic in the seed.
// With this variance G^T G concentrates around the identity, which is what
// the norm-estimation sketches rely on.
DenseMatrix gaussian_sketch(Index m, Index n, std::uint64_t seed);

bool all_finite(const DenseMatrix& a);
void require_finite(const DenseMatrix& a, const char* what);

double squared_frobenius(const DenseMatrix& a);

// Sum of squared singular values beyond the first k: ||A - A_k||_F^2.
double tail_energy(const Vector& sigma, Index k);

}  // namespace coresketch
