#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"
#include "coresketch/weights.hpp"

namespace coresketch {

enum class Axis { kRows, kColumns };

// A coreset: selected indices with positive cost weights. For cost exponent
// p the equivalent row scaling when materializing is weight^{1/p}.
struct WeightedSubset {
  Index source_n = 0;
  Axis axis = Axis::kRows;
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;
  std::string scheme;

  Index size() const { return static_cast<Index>(indices.size()); }

  // Rows of a (or columns when axis == kColumns, gathered as rows of a^T)
  // scaled by weight^{1/cost_exponent}.
  DenseMatrix gather(const DenseMatrix& a, double cost_exponent) const;
};

struct SchemeConfig {
  WeightScheme scheme = WeightScheme::kL2;
  double p = 2.0;  // cost exponent for the Lewis scheme
  Index k = 0;     // target rank for the ridge scheme
  double eps = 0.5;
  double delta = 0.1;
  double c_final = 1.0;
  double c_intermediate = 1.0;
  double intermediate_eps = 0.01;
  // Query-space dimension stand-in used by size formulas; 0 means use the
  // documented default for the task (d+1 for subspace costs, k(d+1) for
  // clustering).
  Index vc_dim = 0;
  Index jl_factor = kDefaultJlFactor;
  bool ridge_alg6_literal = false;
  double lewis_tol = 1e-8;
  Index lewis_max_iter = 200;
};

// Iterative halving-chain sampler. Walks S_0 c ... c S_T = [n]; at level t
// it preprocesses the scheme oracle on the previous level's weighted sample,
// draws the next sample with p_i = min{1, c * w'_i} (c normalized so the
// expected size matches the level target), and reweights selected rows by
// 1/p_i. Intermediate levels run at constant accuracy, the final level at
// the target accuracy. Restarts with doubled oversampling (up to 3 times)
// if a level comes back empty.
WeightedSubset iterate_sample(const DenseMatrix& a, const SchemeConfig& cfg, Index s,
                              Index s_mid, QueryLedger& ledger, std::uint64_t seed);

// Spectral coreset: sqrt-weighted subset B with B^T B = (1 +- eps) A^T A at
// the configured success rate. Expected size ~ 2 eps^-2 d ln(d/delta).
WeightedSubset l2_coreset(const DenseMatrix& a, double eps, double delta,
                          QueryLedger& ledger, std::uint64_t seed);

// Entrywise-l_p subspace coreset via Lewis-weight sampling: stage 1 builds a
// constant-accuracy approximator, stage 2 resamples every row at the
// p-regime rate. Row scaling at materialization is q^{-1/p}.
WeightedSubset lp_coreset(const DenseMatrix& a, double p, double eps, double delta,
                          QueryLedger& ledger, std::uint64_t seed,
                          double alpha_constant = 1.0);

// (k,p)-subspace sampler: powers of ridge leverage scores with the
// two-regime probability formula (the n^{p/2-1} factor only for p >= 2).
// alpha_constant scales the theoretical rate eps^2 / log^3 n, which
// saturates to keep-everything at small n; larger values subsample.
WeightedSubset kp_subspace_sample(const DenseMatrix& a, Index k, double p, double eps,
                                  QueryLedger& ledger, std::uint64_t seed,
                                  double alpha_constant = 1.0);

// Oracle construction shared by the framework: preprocess cfg's scheme on
// the current coreset matrix.
WeightOracleState preprocess_scheme(const DenseMatrix& coreset_matrix, const SchemeConfig& cfg,
                                    Index n_total, std::uint64_t seed);

}  // namespace coresketch
