#include "coresketch/tensor3.hpp"

#include <cmath>

#include "coresketch/errors.hpp"

namespace coresketch {

double Tensor3::squared_frobenius() const {
  double s = 0.0;
  for (double v : data) s += v * v;
  return s;
}

bool Tensor3::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix flatten(const Tensor3& t, int mode) {
  const Index n1 = t.dims[0], n2 = t.dims[1], n3 = t.dims[2];
  switch (mode) {
    case 1: {
      DenseMatrix m(n1, n2 * n3);
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) m(i, j * n3 + l) = t(i, j, l);
      return m;
    }
    case 2: {
      DenseMatrix m(n2, n1 * n3);
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) m(j, i * n3 + l) = t(i, j, l);
      return m;
    }
    case 3: {
      DenseMatrix m(n3, n1 * n2);
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) m(l, i * n2 + j) = t(i, j, l);
      return m;
    }
    default:
      throw ContractError("flatten: mode must be 1, 2 or 3");
  }
}

Tensor3 unflatten(const DenseMatrix& m, int mode, std::array<Index, 3> dims) {
  const Index n1 = dims[0], n2 = dims[1], n3 = dims[2];
  Tensor3 t(n1, n2, n3);
  switch (mode) {
    case 1:
      if (m.rows() != n1 || m.cols() != n2 * n3) throw ContractError("unflatten: shape mismatch");
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) t(i, j, l) = m(i, j * n3 + l);
      return t;
    case 2:
      if (m.rows() != n2 || m.cols() != n1 * n3) throw ContractError("unflatten: shape mismatch");
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) t(i, j, l) = m(j, i * n3 + l);
      return t;
    case 3:
      if (m.rows() != n3 || m.cols() != n1 * n2) throw ContractError("unflatten: shape mismatch");
      for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j < n2; ++j)
          for (Index l = 0; l < n3; ++l) t(i, j, l) = m(l, i * n2 + j);
      return t;
    default:
      throw ContractError("unflatten: mode must be 1, 2 or 3");
  }
}

DenseMatrix khatri_rao_rows(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ContractError("khatri_rao_rows: row counts differ");
  const Index n = a.rows(), p = a.cols(), q = b.cols();
  DenseMatrix out(n, p * q);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      for (Index l = 0; l < q; ++l) out(i, j * q + l) = a(i, j) * b(i, l);
  return out;
}

namespace {

// Contract a single mode; empty factor = identity.
Tensor3 contract_mode(const Tensor3& t, const DenseMatrix& b, int mode) {
  if (b.size() == 0) return t;
  if (b.rows() != t.dims[mode - 1]) throw ContractError("tensor_contract: dimension mismatch");
  std::array<Index, 3> nd = t.dims;
  nd[mode - 1] = b.cols();
  Tensor3 out(nd[0], nd[1], nd[2]);
  for (Index i = 0; i < t.dims[0]; ++i)
    for (Index j = 0; j < t.dims[1]; ++j)
      for (Index l = 0; l < t.dims[2]; ++l) {
        const double v = t(i, j, l);
        if (v == 0.0) continue;
        switch (mode) {
          case 1:
            for (Index c = 0; c < b.cols(); ++c) out(c, j, l) += v * b(i, c);
            break;
          case 2:
            for (Index c = 0; c < b.cols(); ++c) out(i, c, l) += v * b(j, c);
            break;
          default:
            for (Index c = 0; c < b.cols(); ++c) out(i, j, c) += v * b(l, c);
        }
      }
  return out;
}

}  // namespace

Tensor3 tensor_contract(const Tensor3& t, const DenseMatrix& b1, const DenseMatrix& b2,
                        const DenseMatrix& b3) {
  Tensor3 r = contract_mode(t, b1, 1);
  r = contract_mode(r, b2, 2);
  r = contract_mode(r, b3, 3);
  return r;
}

Tensor3 cp_reconstruct(const DenseMatrix& u, const DenseMatrix& v, const DenseMatrix& w) {
  if (u.cols() != v.cols() || v.cols() != w.cols())
    throw ContractError("cp_reconstruct: factor rank mismatch");
  Tensor3 t(u.rows(), v.rows(), w.rows());
  for (Index m = 0; m < u.cols(); ++m)
    for (Index i = 0; i < u.rows(); ++i) {
      const double ui = u(i, m);
      if (ui == 0.0) continue;
      for (Index j = 0; j < v.rows(); ++j) {
        const double uv = ui * v(j, m);
        if (uv == 0.0) continue;
        for (Index l = 0; l < w.rows(); ++l) t(i, j, l) += uv * w(l, m);
      }
    }
  return t;
}

}  // namespace coresketch
