#pragma once

#include <cstdint>
#include <vector>

#include "coresketch/coreset.hpp"
#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"
#include "coresketch/tensor3.hpp"

namespace coresketch {

struct CPFactors {
  DenseMatrix u, v, w;  // n_m x r, columnwise rank-1 terms
  Index r = 0;
  bool certified = true;  // false when an iterative fallback stagnated

  Tensor3 reconstruct() const { return cp_reconstruct(u, v, w); }
  double residual_sq(const Tensor3& a) const;
};

struct CURT {
  std::vector<std::uint32_t> col_idx, row_idx, tube_idx;
  DenseMatrix c, r, t;  // verbatim fibers of the source tensor
  Tensor3 core;         // c x r x t
  bool has_core = false;

  double residual_sq(const Tensor3& a) const;
};

// Sample r_sample columns of the row-wise Kronecker product U (.) V
// (columns indexed by pairs (j,l), encoded j * n2 + l) from their exact
// leverage distribution. Proposals come from the product of the factors'
// column leverage scores, thinned by rejection to the exact score; i.i.d.
// draws with duplicates merged, weight 1/(r_sample * p).
WeightedSubset tensor_leverage_sample(const DenseMatrix& u, const DenseMatrix& v,
                                      Index r_sample, double eps, QueryLedger& ledger,
                                      std::uint64_t seed);

// Same distribution for the pair-structured case where the product matrix is
// built from all column pairs of two independent factor matrices fa, fb
// (leverage factorizes exactly, no rejection needed). Pairs (a,b) over
// rows(fa) x rows(fb), encoded a * rows(fb) + b.
WeightedSubset kron_pair_sample(const DenseMatrix& fa, const DenseMatrix& fb, Index r_sample,
                                QueryLedger& ledger, std::uint64_t seed);

// Top-k left singular basis of a sampled response block.
DenseMatrix response_span_projector(const DenseMatrix& b_sample, Index k);

// Convenience wrapper used by the regression route: ridge-sample r = k/eps^2
// columns of the response b, build the projector, and return the induced
// solution X' = Q Q^T b a^+ for min_{rank<=k} ||X a - b||_F.
DenseMatrix response_sampled_solution(const DenseMatrix& a, const DenseMatrix& b, Index k,
                                      double eps, QueryLedger& ledger, std::uint64_t seed);

struct TensorOptions {
  double c_pcp = 0.05;     // size factor for the flattening column subsets
  double c_stage = 0.1;    // scales the Khatri-Rao sample sizes
  double delta = 0.001;
  int als_restarts = 20;
  int als_iters = 30;
};

// Rank-(s1 s2) factors with cost controlled relative to the best rank-k.
CPFactors bicriteria(const Tensor3& a, Index k, double eps, QueryLedger& ledger,
                     std::uint64_t seed, const TensorOptions& opts = {});

// Column/row/tube subset selection (no core); the best core is fit by the
// caller (closed form via factor pseudoinverses).
CURT crt_select(const Tensor3& a, Index k, double eps, QueryLedger& ledger,
                std::uint64_t seed, const TensorOptions& opts = {});

// Turn rank-k factors into a CURT decomposition with a rank-k core.
CURT lowrank_to_curt(const Tensor3& a, const CPFactors& factors, double eps,
                     std::uint64_t seed, QueryLedger* ledger = nullptr);

struct ReducedProblem {
  DenseMatrix y1, y2, y3;  // c_m x b_m sampled factor maps
  Tensor3 c;               // c1 x c2 x c3 subsampled tensor
  std::vector<std::uint32_t> rows1, rows2, rows3;
};

// Leverage-sampled problem reduction: any good solution of the reduced
// problem lifts to the original with (1+eps) loss.
ReducedProblem sublinear_reduction(const Tensor3& a, const DenseMatrix& v1,
                                   const DenseMatrix& v2, const DenseMatrix& v3, Index k,
                                   double eps, QueryLedger& ledger, std::uint64_t seed,
                                   double c_reduce = 1.0);

// Rank-k pipeline: column subsets + reduction, with the reduced core problem
// solved by restarted alternating least squares.
CPFactors fpt_lowrank(const Tensor3& a, Index k, double eps, QueryLedger& ledger,
                      std::uint64_t seed, const TensorOptions& opts = {});

// Restarted ALS for min ||sum_i (y1 x1)_i (x) (y2 x2)_i (x) (y3 x3)_i - c||.
struct AlsResult {
  DenseMatrix x1, x2, x3;
  double residual_sq = 0.0;
  bool stagnated = false;
};
AlsResult als_cp(const Tensor3& c, const DenseMatrix& y1, const DenseMatrix& y2,
                 const DenseMatrix& y3, Index k, int restarts, int iters, std::uint64_t seed);

// Best core for fixed fiber subsets: U = A contracted with the factor
// pseudoinverses (exact joint least squares).
Tensor3 best_core(const Tensor3& a, const DenseMatrix& c, const DenseMatrix& r,
                  const DenseMatrix& t);

}  // namespace coresketch
