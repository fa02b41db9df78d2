#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "coresketch/coreset.hpp"
#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"
#include "coresketch/lowrank.hpp"

namespace coresketch {

// Symmetric kernel over a fixed point set. Every evaluation made on behalf
// of an algorithm is charged to the ledger; tests use eval_free to build
// reference Grams without polluting the accounting.
struct KernelSpec {
  enum class Kind { kLinear, kPolynomial, kRbf, kCustom };

  Kind kind = Kind::kRbf;
  double gamma = 1.0;  // rbf: exp(-gamma |x - y|^2)
  int degree = 2;      // polynomial: (x.y + 1)^degree
  DenseMatrix points;  // n x d
  std::function<double(const Vector&, const Vector&)> custom;
  bool symmetric = true;

  Index n() const { return points.rows(); }
  double eval_free(Index i, Index j) const;
  double eval(Index i, Index j, QueryLedger& ledger) const {
    ledger.kernel_evaluations += 1;
    return eval_free(i, j);
  }
  DenseMatrix dense_free() const;  // full Gram, test-scale only
};

// Weighted kernel-column block restricted to a sample D: materializing a row
// costs exactly |D| kernel evaluations, charged once (rows are cached).
class FactoredColumns {
 public:
  FactoredColumns(const KernelSpec& spec, std::vector<std::uint32_t> idx,
                  Vector column_scale);

  Index cols() const { return static_cast<Index>(idx_.size()); }
  const std::vector<std::uint32_t>& indices() const { return idx_; }

  // D-restricted kernel row i (already column-scaled).
  const Vector& row(Index i, QueryLedger& ledger) const;
  DenseMatrix materialize(QueryLedger& ledger) const;  // all n rows

 private:
  const KernelSpec* spec_;
  std::vector<std::uint32_t> idx_;
  Vector scale_;
  mutable std::vector<std::optional<Vector>> cache_;
};

struct NystromOptions {
  double c_rank = 8.0;        // rank-selection constant in the level regularizer
  Index intermediate = 0;     // intermediate level sample size; 0 = same as s
  bool paper_rate = false;    // literal 16 q log(2k/delta) inclusion rate
  Index min_rank = 1;
};

// Recursive generalized ridge-leverage sampling over kernel columns: a
// halving chain where each level scores points against the previous level's
// weighted block and resamples. Returns the level-T sample.
WeightedSubset qnystrom(const KernelSpec& spec, Index s, double delta, QueryLedger& ledger,
                        std::uint64_t seed, const NystromOptions& opts = {});

struct KernelLowRankOptions {
  double c_landmarks = 0.5;   // scales sqrt(n k / eps) for the two column samples
  Index ny_intermediate = 12;
  double c_rows = 2.5;        // scales k/eps for the regression row samples
  double c_final = 0.75;      // scales k log k + k/eps for the last sample
  double delta = 0.01;
};

// Sampled rank-k approximation of the kernel matrix in factored form.
FactoredLowRank qlowrank_kernel(const KernelSpec& spec, Index k, double eps, double delta,
                                QueryLedger& ledger, std::uint64_t seed,
                                const KernelLowRankOptions& opts = {});

}  // namespace coresketch
