#pragma once

#include <cstdint>

#include "coresketch/coreset.hpp"
#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"

namespace coresketch {

struct FactoredLowRank {
  DenseMatrix left;   // n x k
  DenseMatrix right;  // d x k
  Index k = 0;

  // Tests only; the product is never formed inside the pipelines.
  DenseMatrix materialize() const { return left * right.transpose(); }
};

// Size constants for the sampled low-rank pipeline. The asymptotic recipe
// k1 ~ k log(k/delta)/eps^2, k2 ~ k1 log k1 + k1/eps, k3 ~ k2 log k2 + k2/eps
// overshoots small instances badly, so each stage carries a tunable factor
// and is capped by the dimension it samples from.
struct LowRankOptions {
  double c_columns = 0.35;     // k1 factor
  double c_rows = 0.30;        // k2, k3 factor
  double delta = 0.001;        // per-subroutine failure budget
  Index jl_factor = kDefaultJlFactor;
};

// Leverage-score row sample of expected size s, weighted so that
// E[(SA)^T SA] = A^T A under sqrt-weight scaling.
WeightedSubset qls(const DenseMatrix& a, Index s, double delta, QueryLedger& ledger,
                   std::uint64_t seed);

// Projection-cost preserving column subset: ridge-scheme iterate_sample over
// the columns of a.
WeightedSubset column_pcp(const DenseMatrix& a, Index k, double eps, double delta,
                          QueryLedger& ledger, std::uint64_t seed,
                          double c_size = 0.35, Index jl_factor = kDefaultJlFactor);

// argmin_{rank(X) <= k} ||A - B X C||_F via the closed form
// B^+ [P_B A P_C]_k C^+.
DenseMatrix generalized_lowrank(const DenseMatrix& a, const DenseMatrix& b,
                                const DenseMatrix& c, Index k);

// Least-squares solution of the sketched system: argmin_Y ||SA Y - SB||_F.
DenseMatrix sampled_regression(const DenseMatrix& sa, const DenseMatrix& sb);

// Pure-sampling rank-k approximation: column subset, then leverage-sampled
// bilinear regression solved in closed form on the sampled core. After the
// column stage, source entries are touched only inside sampled rows/columns;
// the ledger's classical_entry_reads counts them and the routine checks the
// count against the sampling pattern.
FactoredLowRank qlowrank(const DenseMatrix& a, Index k, double eps, QueryLedger& ledger,
                         std::uint64_t seed, const LowRankOptions& opts = {});

}  // namespace coresketch
