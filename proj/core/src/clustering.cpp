#include "coresketch/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coresketch/errors.hpp"
#include "coresketch/rng.hpp"
#include "coresketch/sampler.hpp"

namespace coresketch {

PartitionOracle PartitionOracle::build(const DenseMatrix& points, const CenterSet& centers) {
  const Index n = points.rows();
  PartitionOracle out;
  out.m = centers.size();
  out.assign.resize(static_cast<std::size_t>(n));
  out.dist_p = Vector(n);
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index j = 0; j < centers.size(); ++j) {
      const double d = (points.row(i) - centers.centers.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    out.assign[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(arg);
    out.dist_p[i] = std::pow(std::sqrt(best), centers.p);
  }
  return out;
}

double clustering_cost(const DenseMatrix& points, const CenterSet& centers, double p) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < centers.size(); ++j)
      best = std::min(best, (points.row(i) - centers.centers.row(j)).squaredNorm());
    total += std::pow(std::sqrt(best), p);
  }
  return total;
}

CenterSet bicriteria_centers(const DenseMatrix& points, Index k, double p, std::uint64_t seed,
                             double rounds_factor) {
  require_finite(points, "bicriteria_centers");
  const Index n = points.rows();
  if (k < 1 || k > n) throw ContractError("bicriteria_centers: k out of range");

  const double lg = std::log2(std::max(2.0, static_cast<double>(n)));
  const Index rounds = std::min<Index>(
      n, std::max<Index>(k, static_cast<Index>(std::ceil(
                                rounds_factor * static_cast<double>(k) * lg * lg))));

  RngStream rng = RngStream(seed).derive("bicriteria_centers");
  std::vector<Index> picked;
  picked.push_back(static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n))));
  Vector mind(n);
  for (Index i = 0; i < n; ++i)
    mind[i] = std::pow((points.row(i) - points.row(picked[0])).norm(), p);

  while (static_cast<Index>(picked.size()) < rounds) {
    double total = mind.sum();
    Index next;
    if (total <= 0.0) {
      next = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    } else {
      double u = rng.next_double() * total, acc = 0.0;
      next = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += mind[i];
        if (acc >= u) {
          next = i;
          break;
        }
      }
    }
    picked.push_back(next);
    for (Index i = 0; i < n; ++i)
      mind[i] = std::min(mind[i], std::pow((points.row(i) - points.row(next)).norm(), p));
  }

  CenterSet out;
  out.p = p;
  out.provenance = CenterSet::Provenance::kBicriteria;
  out.centers = DenseMatrix(static_cast<Index>(picked.size()), points.cols());
  for (std::size_t j = 0; j < picked.size(); ++j)
    out.centers.row(static_cast<Index>(j)) = points.row(picked[j]);
  return out;
}

double estimate_sum(const std::vector<double>& values, double eps, double delta,
                    QueryLedger& ledger, std::uint64_t seed, bool stress) {
  double total = 0.0;
  for (double v : values) {
    if (v < 0.0) throw ContractError("estimate_sum: negative value");
    total += v;
  }
  ledger.charge_sum_budget(values.size(), eps, delta);
  if (stress) {
    RngStream rng = RngStream(seed).derive("estimate_sum_stress");
    total *= 1.0 + (2.0 * rng.next_double() - 1.0) * eps / 2.0;
  }
  return total;
}

std::vector<double> estimate_cluster_sizes(const PartitionOracle& part, Index m, double eps,
                                           double delta, QueryLedger& ledger,
                                           std::uint64_t seed, bool stress) {
  std::vector<double> counts(static_cast<std::size_t>(m), 0.0);
  for (std::uint32_t a : part.assign) counts[a] += 1.0;
  ledger.charge_count_budget(part.assign.size(), static_cast<std::uint64_t>(m), eps, delta);
  if (stress) {
    RngStream rng = RngStream(seed).derive("estimate_cluster_sizes_stress");
    for (double& c : counts) c *= 1.0 + (2.0 * rng.next_double() - 1.0) * eps / 2.0;
  }
  return counts;
}

SensitivityScores cluster_sensitivities(const DenseMatrix& points, Index k, double p,
                                        QueryLedger& ledger, std::uint64_t seed,
                                        const ClusterOptions& opts) {
  require_finite(points, "cluster_sensitivities");
  const Index n = points.rows();
  RngStream rs = RngStream(seed).derive("qcluster");

  SensitivityScores out;
  out.centers = bicriteria_centers(points, k, p, rs.next_u64(), opts.bicriteria_rounds_factor);
  out.partition = PartitionOracle::build(points, out.centers);

  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = out.partition.dist_p[i];
  out.cost_estimate = estimate_sum(dist, opts.intermediate_eps, 0.01, ledger, rs.next_u64(),
                                   opts.stress);
  std::vector<double> sizes =
      estimate_cluster_sizes(out.partition, out.centers.size(), opts.intermediate_eps, 0.01,
                             ledger, rs.next_u64(), opts.stress);

  const double lead = std::pow(2.0, 4.0 * p + 2.0);
  out.scores = Vector(n);
  for (Index i = 0; i < n; ++i) {
    const double frac = out.cost_estimate > 0.0 ? out.partition.dist_p[i] / out.cost_estimate
                                                : 0.0;
    const double nj =
        std::max(sizes[out.partition.assign[static_cast<std::size_t>(i)]], 1.0);
    out.scores[i] = lead * (frac + 1.0 / nj);
  }
  return out;
}

WeightedSubset qcluster(const DenseMatrix& points, Index k, double p, double eps,
                        QueryLedger& ledger, std::uint64_t seed, const ClusterOptions& opts) {
  require_finite(points, "qcluster");
  if (p < 1.0) throw ContractError("qcluster: p must be >= 1");
  const Index n = points.rows();

  const double lg = std::log2(std::max(2.0, static_cast<double>(n)));
  const Index target =
      opts.target_size > 0
          ? std::min(opts.target_size, n)
          : std::min<Index>(n, static_cast<Index>(std::ceil(
                                   static_cast<double>(k * k) / (eps * eps) * lg)));

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kRows;
  out.scheme = "cluster_sensitivity";

  if (n <= target) {
    for (Index i = 0; i < n; ++i) {
      out.indices.push_back(static_cast<std::uint32_t>(i));
      out.weights.push_back(1.0);
    }
    return out;
  }

  SensitivityScores sens = cluster_sensitivities(points, k, p, ledger, seed, opts);
  const double total_sens = sens.scores.sum();

  std::vector<double> probs(static_cast<std::size_t>(n));
  const double scale = total_sens > 0.0 ? static_cast<double>(target) / total_sens : 0.0;
  for (Index i = 0; i < n; ++i)
    probs[static_cast<std::size_t>(i)] = std::min(1.0, scale * sens.scores[i]);

  std::vector<std::uint32_t> picked =
      qsample(probs, ledger, RngStream(seed).derive("qcluster_draw").next_u64());
  if (picked.empty()) throw ConvergenceError("qcluster: empty sample", 0.0);
  for (std::uint32_t idx : picked) {
    out.indices.push_back(idx);
    out.weights.push_back(1.0 / probs[idx]);
  }
  return out;
}

DataSelection qdata_selection(const DenseMatrix& points, const CenterSet& centers,
                              const std::function<double(const Vector&)>& loss,
                              const Vector& lambda, double eps, QueryLedger& ledger,
                              std::uint64_t seed) {
  require_finite(points, "qdata_selection");
  const Index n = points.rows();
  const Index m = centers.size();
  Vector lam = lambda.size() > 0 ? lambda : Vector::Ones(m);
  if (lam.size() != m) throw ContractError("qdata_selection: lambda size mismatch");

  RngStream rs = RngStream(seed).derive("qdata_selection");
  PartitionOracle part = PartitionOracle::build(points, centers);

  DataSelection out;
  out.subset.source_n = n;
  out.subset.axis = Axis::kRows;
  out.subset.scheme = "data_selection";

  // loss touched at the centers only
  Vector center_loss(m);
  for (Index j = 0; j < m; ++j) {
    center_loss[j] = loss(centers.centers.row(j).transpose());
    if (center_loss[j] < 0.0) throw ContractError("qdata_selection: negative loss");
  }
  out.loss_queries = m;

  std::vector<double> weighted_cost(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    weighted_cost[static_cast<std::size_t>(i)] =
        lam[part.assign[static_cast<std::size_t>(i)]] * part.dist_p[i];
  const double cost_lambda = estimate_sum(weighted_cost, 0.01, 0.01, ledger, rs.next_u64());
  std::vector<double> sizes =
      estimate_cluster_sizes(part, m, 0.01, 0.01, ledger, rs.next_u64());
  double loss_mass = 0.0;
  for (Index j = 0; j < m; ++j) loss_mass += sizes[static_cast<std::size_t>(j)] * center_loss[j];

  const double denom = cost_lambda + loss_mass;
  if (denom <= 0.0) {
    out.exact_zero = true;
    return out;
  }

  const Index s = std::max<Index>(1, static_cast<Index>(std::ceil(1.0 / (eps * eps))));
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double q = (center_loss[part.assign[static_cast<std::size_t>(i)]] + part.dist_p[i]) /
                     denom;
    probs[static_cast<std::size_t>(i)] = std::min(1.0, static_cast<double>(s) * q);
  }
  std::vector<std::uint32_t> picked = qsample(probs, ledger, rs.next_u64());
  for (std::uint32_t idx : picked) {
    out.subset.indices.push_back(idx);
    out.subset.weights.push_back(1.0 / probs[idx]);
  }
  return out;
}

}  // namespace coresketch
