#pragma once

#include <cstdint>
#include <vector>

#include "coresketch/linalg.hpp"

namespace coresketch {

// Exact row leverage scores tau_i = a_i^T (A^T A)^+ a_i.
Vector exact_leverage(const DenseMatrix& a);

// Exact ridge leverage scores with lambda = ||A - A_k||_F^2 / k. Falls back
// to plain leverage when the regularizer vanishes (rank <= k).
Vector exact_ridge_leverage(const DenseMatrix& a, Index k);

// (C^T C + lambda_{C_k} I)^{-1} as a dense matrix plus the regularizer used;
// pseudoinverse form when lambda = 0. Test-scale helper.
struct RidgeForm {
  DenseMatrix inverse;  // d x d
  double lambda = 0.0;
};
RidgeForm ridge_quadratic_form(const DenseMatrix& c, Index k);

struct LewisState {
  Vector weights;
  double p = 2.0;
  double residual = 0.0;  // max relative fixed-point violation at exit
  int iterations = 0;
};

// Fixed-point iteration w_i <- (a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2},
// damped for p >= 4. Requires full column rank.
LewisState lewis_weights(const DenseMatrix& a, double p, double tol = 1e-8,
                         Index max_iter = 200);

// (C^T W_C^{1-2/p} C)^{-1} for the converged Lewis weights of C.
DenseMatrix lewis_quadratic_form(const DenseMatrix& c, double p, double tol = 1e-8);

// Exact subset-relative l2 sensitivity: the quadratic form against the rows
// indexed by subset, with the queried row joined in when it is absent.
// Test-scale only (dense pseudoinverse per row).
Vector leverage_against_subset(const DenseMatrix& a, const std::vector<std::uint32_t>& subset);

enum class WeightScheme { kL2, kLp, kRidge };

// Preprocessed score oracle: query(a) evaluates a sketched version of the
// scheme's quadratic form. When the sketch would not compress (rows >= rank,
// always the case at small rank), the exact factor is kept and queries are
// exact. Otherwise a Gaussian sketch is used and the scale is calibrated
// from the drawn matrix's actual spectrum so that queries never
// underestimate.
struct WeightOracleState {
  WeightScheme scheme = WeightScheme::kL2;
  double p = 2.0;       // score exponent for kLp
  Index ridge_k = 0;
  double lambda = 0.0;  // ridge regularizer actually used
  DenseMatrix sketch;   // M: span-part query is ||M a||_2^2 * scale
  DenseMatrix vt;       // row-space basis (rank x d), for the complement term
  double scale = 1.0;
  double eps0 = 0.0;  // achieved sketch distortion; 0 means exact
  bool alg6_literal = false;

  double query(const Vector& a) const;
  double query_row(const DenseMatrix& a, Index i) const { return query(a.row(i).transpose()); }
};

// jl_factor scales the sketch row count (rows = jl_factor * ceil(log2 n),
// times p^2 for the Lewis scheme).
WeightOracleState leverage_preprocess(const DenseMatrix& c, Index n_total, Index jl_factor,
                                      std::uint64_t seed);
WeightOracleState lewis_preprocess(const DenseMatrix& c, double p, Index n_total,
                                   Index jl_factor, std::uint64_t seed, double tol = 1e-8,
                                   Index max_iter = 200);
// alg6_literal switches to the unsquared-tail regularizer and the additive
// 1/sqrt(lambda) sketch term, with no orthogonal-complement correction.
WeightOracleState ridge_preprocess(const DenseMatrix& c, Index k, Index n_total,
                                   Index jl_factor, std::uint64_t seed,
                                   bool alg6_literal = false);

inline constexpr Index kDefaultJlFactor = 24;

}  // namespace coresketch
