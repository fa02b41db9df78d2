#pragma once

#include <array>
#include <vector>

#include "coresketch/linalg.hpp"

namespace coresketch {

// Third-order tensor, contiguous storage with the first index slowest
// (entry (i,j,l) lives at i*n2*n3 + j*n3 + l).
struct Tensor3 {
  std::array<Index, 3> dims{0, 0, 0};
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(Index n1, Index n2, Index n3)
      : dims{n1, n2, n3}, data(static_cast<std::size_t>(n1 * n2 * n3), 0.0) {}

  double& operator()(Index i, Index j, Index l) {
    return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + l)];
  }
  double operator()(Index i, Index j, Index l) const {
    return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + l)];
  }

  Index size() const { return dims[0] * dims[1] * dims[2]; }
  double squared_frobenius() const;
  bool all_finite() const;
};

// Mode-m flattening: an n_m x (product of the other two dims) matrix. The
// column index pairs the remaining modes in increasing-mode order, so for a
// rank-one tensor u (x) v (x) w the three flattenings are u vec(v (x) w)^T,
// v vec(u (x) w)^T and w vec(u (x) v)^T.
DenseMatrix flatten(const Tensor3& t, int mode);
Tensor3 unflatten(const DenseMatrix& m, int mode, std::array<Index, 3> dims);

// Row-wise Kronecker product: output row i = A_i (x) B_i, shape a x (b*d).
DenseMatrix khatri_rao_rows(const DenseMatrix& a, const DenseMatrix& b);

// Triple contraction T(B1,B2,B3)_{i,j,l} = sum T_{i'j'l'} B1_{i'i} B2_{j'j} B3_{l'l}.
// An empty matrix stands for the identity on that mode.
Tensor3 tensor_contract(const Tensor3& t, const DenseMatrix& b1, const DenseMatrix& b2,
                        const DenseMatrix& b3);

// Rank-1 outer expansion helper: sum_i U_i (x) V_i (x) W_i where the factors
// are given columnwise.
Tensor3 cp_reconstruct(const DenseMatrix& u, const DenseMatrix& v, const DenseMatrix& w);

}  // namespace coresketch
