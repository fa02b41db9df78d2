#include "coresketch/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/rng.hpp"

namespace coresketch {

bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

void require_finite(const DenseMatrix& a, const char* what) {
  if (!a.allFinite()) throw ContractError(std::string(what) + ": non-finite entries");
}

double squared_frobenius(const DenseMatrix& a) { return a.squaredNorm(); }

double tail_energy(const Vector& sigma, Index k) {
  double t = 0.0;
  for (Index i = k; i < sigma.size(); ++i) t += sigma[i] * sigma[i];
  return t;
}

Index ThinSVD::rank() const {
  if (sigma.size() == 0) return 0;
  const double cut = kRankTol * sigma[0];
  Index r = 0;
  while (r < sigma.size() && sigma[r] > cut) ++r;
  return r;
}

ThinSVD thin_svd(const DenseMatrix& a) {
  require_finite(a, "thin_svd");
  ThinSVD out;
  if (a.rows() == 0 || a.cols() == 0) {
    out.U = DenseMatrix(a.rows(), 0);
    out.sigma = Vector(0);
    out.V = DenseMatrix(a.cols(), 0);
    return out;
  }
  // BDCSVD degrades on tiny matrices; Jacobi is exact enough there.
  if (a.rows() <= 16 || a.cols() <= 16) {
    Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = svd.matrixU();
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
  } else {
    Eigen::BDCSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = svd.matrixU();
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
  }
  // Sign convention: first entry of each U column with magnitude above the
  // column's noise floor is made nonnegative.
  for (Index j = 0; j < out.U.cols(); ++j) {
    double pick = 0.0;
    for (Index i = 0; i < out.U.rows(); ++i) {
      if (std::abs(out.U(i, j)) > 1e-12) {
        pick = out.U(i, j);
        break;
      }
    }
    if (pick < 0.0) {
      out.U.col(j) = -out.U.col(j);
      out.V.col(j) = -out.V.col(j);
    }
  }
  return out;
}

DenseMatrix pseudoinverse(const DenseMatrix& a) {
  ThinSVD svd = thin_svd(a);
  const Index r = svd.rank();
  if (r == 0) return DenseMatrix::Zero(a.cols(), a.rows());
  DenseMatrix vr = svd.V.leftCols(r);
  DenseMatrix ur = svd.U.leftCols(r);
  Vector inv = svd.sigma.head(r).cwiseInverse();
  return vr * inv.asDiagonal() * ur.transpose();
}

DenseMatrix best_rank_k(const DenseMatrix& a, Index k) {
  if (k < 0 || k > std::min(a.rows(), a.cols()))
    throw ContractError("best_rank_k: k out of range");
  if (k == 0) return DenseMatrix::Zero(a.rows(), a.cols());
  ThinSVD svd = thin_svd(a);
  const Index kk = std::min<Index>(k, svd.sigma.size());
  return svd.U.leftCols(kk) * svd.sigma.head(kk).asDiagonal() *
         svd.V.leftCols(kk).transpose();
}

DenseMatrix gaussian_sketch(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw ContractError("gaussian_sketch: dimensions must be >= 1");
  RngStream rng = RngStream(seed).derive("gaussian_sketch");
  DenseMatrix g(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = scale * rng.next_gaussian();
  return g;
}

}  // namespace coresketch
