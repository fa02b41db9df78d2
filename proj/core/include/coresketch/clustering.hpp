#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "coresketch/coreset.hpp"
#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"

namespace coresketch {

struct CenterSet {
  DenseMatrix centers;  // m x d
  double p = 2.0;
  enum class Provenance { kBicriteria, kUser } provenance = Provenance::kUser;

  Index size() const { return centers.rows(); }
};

// Exact nearest-center assignment with cached distances (c_tau = 1).
struct PartitionOracle {
  std::vector<std::uint32_t> assign;  // point -> center index
  Vector dist_p;                      // ||a_i - tau(a_i)||^p
  Index m = 0;

  static PartitionOracle build(const DenseMatrix& points, const CenterSet& centers);
};

// Adaptive D^p sampling: each round picks a point with probability
// proportional to its current cost and adds it as a center.
CenterSet bicriteria_centers(const DenseMatrix& points, Index k, double p, std::uint64_t seed,
                             double rounds_factor = 0.25);

// Exact sum computed classically; the quantum counter is charged with the
// estimation budget. Under stress the result is perturbed by a seeded
// (1 +- eps/2) factor to exercise downstream constant-factor robustness.
double estimate_sum(const std::vector<double>& values, double eps, double delta,
                    QueryLedger& ledger, std::uint64_t seed, bool stress = false);

// Per-cluster size estimates, same contract as estimate_sum.
std::vector<double> estimate_cluster_sizes(const PartitionOracle& part, Index m, double eps,
                                           double delta, QueryLedger& ledger,
                                           std::uint64_t seed, bool stress = false);

struct ClusterOptions {
  Index target_size = 0;  // 0 = default k^2 eps^-2 log2(n), capped at n
  double bicriteria_rounds_factor = 0.25;
  double intermediate_eps = 0.01;
  bool stress = false;
};

// Per-point sensitivity overestimates over bicriteria centers:
// 2^{4p+2} (dist^p / cost + 1 / cluster_size), with the estimated
// quantities at intermediate accuracy.
struct SensitivityScores {
  Vector scores;
  CenterSet centers;
  PartitionOracle partition;
  double cost_estimate = 0.0;
};
SensitivityScores cluster_sensitivities(const DenseMatrix& points, Index k, double p,
                                        QueryLedger& ledger, std::uint64_t seed,
                                        const ClusterOptions& opts = {});

// Sensitivity-sampling coreset for (k,p)-clustering over bicriteria centers.
WeightedSubset qcluster(const DenseMatrix& points, Index k, double p, double eps,
                        QueryLedger& ledger, std::uint64_t seed,
                        const ClusterOptions& opts = {});

// One-round adaptive sampling for loss-aware data selection. The loss is
// evaluated only at the centers (exactly centers.size() queries). lambda
// holds the per-cluster smoothness factors; empty means all ones.
struct DataSelection {
  WeightedSubset subset;
  bool exact_zero = false;  // all losses and costs vanished
  Index loss_queries = 0;
};
DataSelection qdata_selection(const DenseMatrix& points, const CenterSet& centers,
                              const std::function<double(const Vector&)>& loss,
                              const Vector& lambda, double eps, QueryLedger& ledger,
                              std::uint64_t seed);

double clustering_cost(const DenseMatrix& points, const CenterSet& centers, double p);

}  // namespace coresketch
