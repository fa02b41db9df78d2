#include "coresketch/lowrank.hpp"

#include <algorithm>
#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/rng.hpp"
#include "coresketch/sampler.hpp"
#include "coresketch/weights.hpp"

namespace coresketch {

WeightedSubset qls(const DenseMatrix& a, Index s, double delta, QueryLedger& ledger,
                   std::uint64_t seed) {
  (void)delta;
  const Index n = a.rows();
  if (s < 1 || s > n) throw ContractError("qls: sample size out of range");
  if (s == n) {
    WeightedSubset all;
    all.source_n = n;
    all.axis = Axis::kRows;
    all.scheme = "qls";
    for (Index i = 0; i < n; ++i) {
      all.indices.push_back(static_cast<std::uint32_t>(i));
      all.weights.push_back(1.0);
    }
    return all;
  }
  Vector tau = exact_leverage(a);
  const double total = std::max(tau.sum(), 1e-300);
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    probs[static_cast<std::size_t>(i)] =
        std::min(1.0, static_cast<double>(s) * tau[i] / total);
  std::vector<std::uint32_t> picked =
      qsample(probs, ledger, RngStream(seed).derive("qls").next_u64());

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kRows;
  out.scheme = "qls";
  for (std::uint32_t idx : picked) {
    out.indices.push_back(idx);
    out.weights.push_back(1.0 / probs[idx]);
  }
  if (out.indices.empty()) {
    // Keep the single heaviest row rather than returning a useless empty
    // sketch; only reachable for adversarially tiny s.
    Index best = 0;
    tau.maxCoeff(&best);
    out.indices.push_back(static_cast<std::uint32_t>(best));
    out.weights.push_back(1.0 / std::max(probs[static_cast<std::size_t>(best)], 1e-12));
  }
  return out;
}

WeightedSubset column_pcp(const DenseMatrix& a, Index k, double eps, double delta,
                          QueryLedger& ledger, std::uint64_t seed, double c_size,
                          Index jl_factor) {
  if (k < 1 || k > std::min(a.rows(), a.cols()))
    throw ContractError("column_pcp: k out of range");
  const Index ncols = a.cols();
  const double logterm = std::log2(std::max(2.0, static_cast<double>(k) / delta));
  const Index s = std::min<Index>(
      ncols, std::max<Index>(k + 1, static_cast<Index>(std::ceil(
                                        c_size * static_cast<double>(k) * logterm /
                                        (eps * eps)))));
  const Index s_mid = std::min<Index>(
      ncols, std::max<Index>(k + 1, static_cast<Index>(std::ceil(
                                        c_size * static_cast<double>(k) * logterm))));
  SchemeConfig cfg;
  cfg.scheme = WeightScheme::kRidge;
  cfg.k = k;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.jl_factor = jl_factor;
  DenseMatrix at = a.transpose();
  WeightedSubset ws = iterate_sample(at, cfg, s, s_mid, ledger, seed);
  ws.axis = Axis::kColumns;
  ws.scheme = "ridge";
  return ws;
}

DenseMatrix generalized_lowrank(const DenseMatrix& a, const DenseMatrix& b,
                                const DenseMatrix& c, Index k) {
  if (b.rows() != a.rows() || c.cols() != a.cols())
    throw ContractError("generalized_lowrank: incompatible shapes");
  ThinSVD sb = thin_svd(b);
  ThinSVD sc = thin_svd(c);
  const Index rb = sb.rank(), rc = sc.rank();
  DenseMatrix ub = sb.U.leftCols(rb);
  DenseMatrix vc = sc.V.leftCols(rc);
  DenseMatrix mid = ub * (ub.transpose() * a * vc) * vc.transpose();
  DenseMatrix mid_k = best_rank_k(mid, std::min<Index>(k, std::min(mid.rows(), mid.cols())));
  return pseudoinverse(b) * mid_k * pseudoinverse(c);
}

DenseMatrix sampled_regression(const DenseMatrix& sa, const DenseMatrix& sb) {
  if (sa.rows() != sb.rows()) throw ContractError("sampled_regression: row mismatch");
  return pseudoinverse(sa) * sb;
}

namespace {

DenseMatrix gather_columns_weighted(const DenseMatrix& a, const WeightedSubset& ws,
                                    QueryLedger& ledger) {
  DenseMatrix c(a.rows(), ws.size());
  for (Index j = 0; j < ws.size(); ++j) {
    const Index idx = static_cast<Index>(ws.indices[static_cast<std::size_t>(j)]);
    c.col(j) = std::sqrt(ws.weights[static_cast<std::size_t>(j)]) * a.col(idx);
  }
  ledger.classical_entry_reads += static_cast<std::uint64_t>(a.rows()) *
                                  static_cast<std::uint64_t>(ws.size());
  return c;
}

DenseMatrix gather_rows_weighted(const DenseMatrix& a, const WeightedSubset& ws,
                                 QueryLedger& ledger) {
  DenseMatrix r(ws.size(), a.cols());
  for (Index i = 0; i < ws.size(); ++i) {
    const Index idx = static_cast<Index>(ws.indices[static_cast<std::size_t>(i)]);
    r.row(i) = std::sqrt(ws.weights[static_cast<std::size_t>(i)]) * a.row(idx);
  }
  ledger.classical_entry_reads += static_cast<std::uint64_t>(a.cols()) *
                                  static_cast<std::uint64_t>(ws.size());
  return r;
}

Index stage_size(Index prev, double eps, double c_rows, Index cap) {
  const double lg = std::log2(std::max(2.0, static_cast<double>(prev)));
  return std::min<Index>(
      cap, std::max<Index>(prev, static_cast<Index>(std::ceil(
                                     c_rows * (static_cast<double>(prev) * lg +
                                               static_cast<double>(prev) / eps)))));
}

}  // namespace

FactoredLowRank qlowrank(const DenseMatrix& a, Index k, double eps, QueryLedger& ledger,
                         std::uint64_t seed, const LowRankOptions& opts) {
  const Index n = a.rows(), d = a.cols();
  if (k < 1 || k > std::min(n, d)) throw ContractError("qlowrank: k out of range");

  RngStream root = RngStream(seed).derive("qlowrank");
  for (int attempt = 0; attempt < 2; ++attempt) {
    RngStream rs = root.derive(static_cast<std::uint64_t>(attempt));

    WeightedSubset cols =
        column_pcp(a, k, eps, opts.delta, ledger, rs.next_u64(), opts.c_columns, opts.jl_factor);
    const std::uint64_t reads_before = ledger.classical_entry_reads;

    DenseMatrix c = gather_columns_weighted(a, cols, ledger);
    const Index k1 = c.cols();
    const Index k2 = stage_size(k1, eps, opts.c_rows, n);
    const Index k3 = stage_size(k2, eps, opts.c_rows, d);

    WeightedSubset s_rows = qls(c, k2, opts.delta, ledger, rs.next_u64());
    WeightedSubset t1_rows = qls(c, k2, opts.delta, ledger, rs.next_u64());

    DenseMatrix sa = gather_rows_weighted(a, s_rows, ledger);
    WeightedSubset t2_cols = qls(sa.transpose(), k3, opts.delta, ledger, rs.next_u64());

    // T1 A T2: entries at sampled row/column crossings only.
    DenseMatrix t1at2(t1_rows.size(), t2_cols.size());
    for (Index i = 0; i < t1_rows.size(); ++i)
      for (Index j = 0; j < t2_cols.size(); ++j)
        t1at2(i, j) = std::sqrt(t1_rows.weights[static_cast<std::size_t>(i)]) *
                      std::sqrt(t2_cols.weights[static_cast<std::size_t>(j)]) *
                      a(t1_rows.indices[static_cast<std::size_t>(i)],
                        t2_cols.indices[static_cast<std::size_t>(j)]);
    ledger.classical_entry_reads += static_cast<std::uint64_t>(t1_rows.size()) *
                                    static_cast<std::uint64_t>(t2_cols.size());

    DenseMatrix t1c = t1_rows.gather(c, 2.0);
    DenseMatrix sat2 = t2_cols.gather(sa.transpose(), 2.0).transpose();  // k2 x k3

    // Post-selection reads must stay inside the sampled pattern.
    const std::uint64_t reads_after = ledger.classical_entry_reads - reads_before;
    const std::uint64_t allowed =
        static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(k1) +
        static_cast<std::uint64_t>(s_rows.size()) * static_cast<std::uint64_t>(d) +
        static_cast<std::uint64_t>(t1_rows.size()) * static_cast<std::uint64_t>(t2_cols.size());
    if (reads_after > allowed)
      throw ContractError("qlowrank: entry reads escaped the sampled pattern");

    ThinSVD chk1 = thin_svd(t1c);
    ThinSVD chk2 = thin_svd(sat2);
    if (chk1.rank() < std::min<Index>(k, chk1.sigma.size()) ||
        chk2.rank() < std::min<Index>(k, chk2.sigma.size())) {
      if (attempt == 0) continue;  // rank collapse: one retry with fresh seed
      throw ConvergenceError("qlowrank: sampled sketches lost rank", 0.0);
    }

    DenseMatrix mhat = generalized_lowrank(t1at2, t1c, sat2, k);
    ThinSVD fac = thin_svd(mhat);
    const Index kk = std::min<Index>(k, fac.rank());
    DenseMatrix xhat = fac.U.leftCols(kk) * fac.sigma.head(kk).asDiagonal();
    DenseMatrix yhat = fac.V.leftCols(kk).transpose();

    FactoredLowRank out;
    out.k = k;
    out.left = c * xhat;                       // n x kk
    out.right = (yhat * sa).transpose();       // d x kk
    if (kk < k) {
      // pad to the advertised rank with zero columns
      DenseMatrix l = DenseMatrix::Zero(n, k), r = DenseMatrix::Zero(d, k);
      l.leftCols(kk) = out.left;
      r.leftCols(kk) = out.right;
      out.left = l;
      out.right = r;
    }
    return out;
  }
  throw ConvergenceError("qlowrank: unreachable", 0.0);
}

}  // namespace coresketch
