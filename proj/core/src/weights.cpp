#include "coresketch/weights.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "coresketch/errors.hpp"
#include "coresketch/rng.hpp"

namespace coresketch {

namespace {

constexpr double kSpanTol = 1e-9;

Vector quadratic_rows(const DenseMatrix& a, const DenseMatrix& h) {
  // v_i = a_i^T H a_i
  DenseMatrix ah = a * h;
  return (ah.array() * a.array()).rowwise().sum();
}

}  // namespace

Vector exact_leverage(const DenseMatrix& a) {
  require_finite(a, "exact_leverage");
  DenseMatrix gram_pinv = pseudoinverse(a.transpose() * a);
  Vector tau = quadratic_rows(a, gram_pinv);
  for (Index i = 0; i < tau.size(); ++i) tau[i] = std::clamp(tau[i], 0.0, 1.0);
  return tau;
}

RidgeForm ridge_quadratic_form(const DenseMatrix& c, Index k) {
  ThinSVD svd = thin_svd(c);
  RidgeForm out;
  // Exactly zero once the numerical rank fits inside k.
  out.lambda = (k > 0 && svd.rank() > k) ? tail_energy(svd.sigma, k) / static_cast<double>(k)
                                         : 0.0;
  const Index d = c.cols();
  if (out.lambda <= 0.0) {
    out.inverse = pseudoinverse(c.transpose() * c);
    out.lambda = 0.0;
  } else {
    DenseMatrix g = c.transpose() * c + out.lambda * DenseMatrix::Identity(d, d);
    out.inverse = g.ldlt().solve(DenseMatrix::Identity(d, d));
  }
  return out;
}

Vector exact_ridge_leverage(const DenseMatrix& a, Index k) {
  require_finite(a, "exact_ridge_leverage");
  RidgeForm form = ridge_quadratic_form(a, k);
  Vector tau = quadratic_rows(a, form.inverse);
  for (Index i = 0; i < tau.size(); ++i) tau[i] = std::max(tau[i], 0.0);
  return tau;
}

LewisState lewis_weights(const DenseMatrix& a, double p, double tol, Index max_iter) {
  require_finite(a, "lewis_weights");
  if (p <= 0.0) throw ContractError("lewis_weights: p must be positive");
  const Index n = a.rows(), d = a.cols();
  {
    ThinSVD svd = thin_svd(a);
    if (svd.rank() < d) throw ContractError("lewis_weights: matrix is column rank-deficient");
  }

  LewisState state;
  state.p = p;
  state.weights = Vector::Constant(n, static_cast<double>(d) / static_cast<double>(n));

  const double expo = 1.0 - 2.0 / p;
  for (Index it = 0; it < max_iter; ++it) {
    Vector w = state.weights;
    if (p < 2.0) {
      // Negative exponent: floor to keep W^{1-2/p} bounded.
      const double floor = 1e-12 * w.maxCoeff();
      for (Index i = 0; i < n; ++i) w[i] = std::max(w[i], floor);
    }
    Vector we(n);
    for (Index i = 0; i < n; ++i) we[i] = std::pow(w[i], expo);
    DenseMatrix g = a.transpose() * we.asDiagonal() * a;
    DenseMatrix ginv = g.ldlt().solve(DenseMatrix::Identity(d, d));
    Vector v = quadratic_rows(a, ginv);

    double res = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double target = std::pow(state.weights[i], 2.0 / p);
      if (target > 0.0) res = std::max(res, std::abs(target - v[i]) / target);
    }
    state.residual = res;
    state.iterations = static_cast<int>(it);
    if (res <= tol) return state;

    if (p < 4.0) {
      for (Index i = 0; i < n; ++i) state.weights[i] = std::pow(std::max(v[i], 0.0), p / 2.0);
    } else {
      // Damped update: log w <- (1 - 2/p) log w + log v.
      for (Index i = 0; i < n; ++i)
        state.weights[i] = std::pow(state.weights[i], 1.0 - 2.0 / p) * std::max(v[i], 0.0);
    }
  }
  throw ConvergenceError("lewis_weights: no convergence after max_iter", state.residual);
}

DenseMatrix lewis_quadratic_form(const DenseMatrix& c, double p, double tol) {
  LewisState lw = lewis_weights(c, p, tol);
  const Index n = c.rows(), d = c.cols();
  const double expo = 1.0 - 2.0 / p;
  Vector we(n);
  for (Index i = 0; i < n; ++i) we[i] = std::pow(std::max(lw.weights[i], 1e-300), expo);
  DenseMatrix g = c.transpose() * we.asDiagonal() * c;
  return g.ldlt().solve(DenseMatrix::Identity(d, d));
}

Vector leverage_against_subset(const DenseMatrix& a, const std::vector<std::uint32_t>& subset) {
  require_finite(a, "leverage_against_subset");
  const Index n = a.rows(), d = a.cols();
  std::vector<bool> in(n, false);
  DenseMatrix gram = DenseMatrix::Zero(d, d);
  for (std::uint32_t idx : subset) {
    in[idx] = true;
    gram += a.row(idx).transpose() * a.row(idx);
  }
  DenseMatrix gram_pinv = pseudoinverse(gram);
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    Vector ai = a.row(i).transpose();
    if (in[static_cast<std::size_t>(i)]) {
      out[i] = ai.dot(gram_pinv * ai);
    } else {
      DenseMatrix aug = gram + ai * ai.transpose();
      out[i] = ai.dot(pseudoinverse(aug) * ai);
    }
  }
  return out;
}

namespace {

// Shared sketch assembly: base maps queries into the r-dimensional factor
// space. If the sketch would have at least r rows it cannot help, so the
// exact factor is kept. Otherwise calibrate the overestimation scale from
// the drawn Gaussian's true spectrum on R^r.
void attach_sketch(WeightOracleState& st, const DenseMatrix& base, Index rows,
                   std::uint64_t seed) {
  const Index r = base.rows();
  if (r == 0) {
    st.sketch = base;
    st.scale = 1.0;
    st.eps0 = 0.0;
    return;
  }
  if (rows >= r) {
    st.sketch = base;
    st.scale = 1.0;
    st.eps0 = 0.0;
    return;
  }
  DenseMatrix g = gaussian_sketch(rows, r, seed);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(DenseMatrix(g.transpose() * g));
  const double lo = std::max(es.eigenvalues().minCoeff(), 1e-12);
  const double hi = es.eigenvalues().maxCoeff();
  st.sketch = g * base;
  st.scale = 1.0 / lo;
  st.eps0 = std::max(1.0 - lo, hi - 1.0);
}

Index sketch_rows(Index n_total, Index jl_factor) {
  const double n = static_cast<double>(std::max<Index>(n_total, 2));
  return std::max<Index>(1, jl_factor * static_cast<Index>(std::ceil(std::log2(n))));
}

}  // namespace

double WeightOracleState::query(const Vector& a) const {
  const double span = sketch.rows() > 0 ? (sketch * a).squaredNorm() * scale : 0.0;
  switch (scheme) {
    case WeightScheme::kL2:
      return span;
    case WeightScheme::kLp:
      return std::pow(span, p / 2.0);
    case WeightScheme::kRidge: {
      if (alg6_literal) return span;
      double orth = a.squaredNorm();
      if (vt.rows() > 0) orth -= (vt * a).squaredNorm();
      orth = std::max(orth, 0.0);
      if (lambda > 0.0) return span + orth / lambda;
      // Vanished regularizer: out-of-span queries have unbounded weight.
      if (orth > kSpanTol * std::max(a.squaredNorm(), 1e-300))
        return std::numeric_limits<double>::infinity();
      return span;
    }
  }
  return span;
}

WeightOracleState leverage_preprocess(const DenseMatrix& c, Index n_total, Index jl_factor,
                                      std::uint64_t seed) {
  require_finite(c, "leverage_preprocess");
  WeightOracleState st;
  st.scheme = WeightScheme::kL2;
  ThinSVD svd = thin_svd(c);
  const Index r = svd.rank();
  DenseMatrix base = svd.sigma.head(r).cwiseInverse().asDiagonal() *
                     svd.V.leftCols(r).transpose();
  attach_sketch(st, base, sketch_rows(n_total, jl_factor), seed);
  return st;
}

WeightOracleState lewis_preprocess(const DenseMatrix& c, double p, Index n_total,
                                   Index jl_factor, std::uint64_t seed, double tol,
                                   Index max_iter) {
  require_finite(c, "lewis_preprocess");
  WeightOracleState st;
  st.scheme = WeightScheme::kLp;
  st.p = p;
  LewisState lw = lewis_weights(c, p, tol, max_iter);
  const Index n = c.rows();
  Vector rowscale(n);
  const double expo = 0.5 - 1.0 / p;
  for (Index i = 0; i < n; ++i) rowscale[i] = std::pow(std::max(lw.weights[i], 1e-300), expo);
  DenseMatrix reweighted = rowscale.asDiagonal() * c;
  ThinSVD svd = thin_svd(reweighted);
  const Index r = svd.rank();
  DenseMatrix base = svd.sigma.head(r).cwiseInverse().asDiagonal() *
                     svd.V.leftCols(r).transpose();
  const Index p2 = std::max<Index>(1, static_cast<Index>(std::ceil(p * p)));
  attach_sketch(st, base, p2 * sketch_rows(n_total, jl_factor), seed);
  return st;
}

WeightOracleState ridge_preprocess(const DenseMatrix& c, Index k, Index n_total,
                                   Index jl_factor, std::uint64_t seed, bool alg6_literal) {
  require_finite(c, "ridge_preprocess");
  WeightOracleState st;
  st.scheme = WeightScheme::kRidge;
  st.ridge_k = k;
  st.alg6_literal = alg6_literal;
  ThinSVD svd = thin_svd(c);
  const Index r = svd.rank();
  st.vt = svd.V.leftCols(r).transpose();

  if (alg6_literal) {
    // Unsquared tail, additive 1/sqrt(lambda) term, no complement correction.
    double lam = 0.0;
    for (Index i = k; i < svd.sigma.size(); ++i) lam += svd.sigma[i];
    st.lambda = lam;
    Vector diag(r);
    for (Index i = 0; i < r; ++i)
      diag[i] = 1.0 / svd.sigma[i] + (lam > 0.0 ? 1.0 / std::sqrt(lam) : 0.0);
    DenseMatrix base = diag.asDiagonal() * st.vt;
    attach_sketch(st, base, sketch_rows(n_total, jl_factor), seed);
    return st;
  }

  st.lambda = (k > 0 && r > k) ? tail_energy(svd.sigma, k) / static_cast<double>(k) : 0.0;
  Vector diag(r);
  for (Index i = 0; i < r; ++i)
    diag[i] = 1.0 / std::sqrt(svd.sigma[i] * svd.sigma[i] + st.lambda);
  DenseMatrix base = diag.asDiagonal() * st.vt;
  attach_sketch(st, base, sketch_rows(n_total, jl_factor), seed);
  return st;
}

}  // namespace coresketch
