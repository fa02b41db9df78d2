#include "coresketch/tensor_lowrank.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "coresketch/errors.hpp"
#include "coresketch/lowrank.hpp"
#include "coresketch/rng.hpp"
#include "coresketch/sampler.hpp"
#include "coresketch/weights.hpp"

namespace coresketch {

double CPFactors::residual_sq(const Tensor3& a) const {
  Tensor3 rec = reconstruct();
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double dlt = rec.data[i] - a.data[i];
    s += dlt * dlt;
  }
  return s;
}

double CURT::residual_sq(const Tensor3& a) const {
  if (!has_core) throw ContractError("CURT::residual_sq: no core fitted");
  // rec = sum_{ijl} core_{ijl} c_i (x) r_j (x) t_l, evaluated as a staged
  // mode contraction of the core with the fiber matrices.
  Tensor3 rec = tensor_contract(core, DenseMatrix(c.transpose()), DenseMatrix(r.transpose()),
                                DenseMatrix(t.transpose()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double dlt = rec.data[i] - a.data[i];
    s += dlt * dlt;
  }
  return s;
}

namespace {

Vector column_leverage(const DenseMatrix& m) {
  // leverage of m's columns: diag(m^T (m m^T)^+ m)
  DenseMatrix gram_pinv = pseudoinverse(m * m.transpose());
  Vector out(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    Vector c = m.col(j);
    out[j] = std::clamp(c.dot(gram_pinv * c), 0.0, 1.0);
  }
  return out;
}

WeightedSubset merge_draws(const std::map<std::uint32_t, double>& acc, Index source_n,
                           const std::string& scheme) {
  WeightedSubset out;
  out.source_n = source_n;
  out.axis = Axis::kColumns;
  out.scheme = scheme;
  for (const auto& [idx, w] : acc) {
    out.indices.push_back(idx);
    out.weights.push_back(w);
  }
  return out;
}

}  // namespace

WeightedSubset tensor_leverage_sample(const DenseMatrix& u, const DenseMatrix& v,
                                      Index r_sample, double eps, QueryLedger& ledger,
                                      std::uint64_t seed) {
  (void)eps;
  if (u.rows() != v.rows()) throw ContractError("tensor_leverage_sample: factor rank mismatch");
  const Index kk = u.rows(), n1 = u.cols(), n2 = v.cols();
  if (r_sample < 1) throw ContractError("tensor_leverage_sample: sample size must be positive");

  Vector tau_u = column_leverage(u);
  Vector tau_v = column_leverage(v);
  const double su = std::max(tau_u.sum(), 1e-300);
  const double sv = std::max(tau_v.sum(), 1e-300);

  // Gram of the product matrix: elementwise product of the factor Grams.
  DenseMatrix gram = (u * u.transpose()).cwiseProduct(v * v.transpose());
  DenseMatrix gram_pinv = pseudoinverse(gram);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram);
  double total = 0.0;  // rank of the product matrix = total leverage mass
  const double cut = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
  for (Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > cut) total += 1.0;
  if (total <= 0.0) throw ContractError("tensor_leverage_sample: zero factors");

  // cumulative tables for the two proposal marginals
  std::vector<double> cum_u(static_cast<std::size_t>(n1)), cum_v(static_cast<std::size_t>(n2));
  double acc = 0.0;
  for (Index j = 0; j < n1; ++j) cum_u[static_cast<std::size_t>(j)] = (acc += tau_u[j] / su);
  acc = 0.0;
  for (Index l = 0; l < n2; ++l) cum_v[static_cast<std::size_t>(l)] = (acc += tau_v[l] / sv);

  RngStream rng = RngStream(seed).derive("tensor_leverage_sample");
  auto draw = [&rng](const std::vector<double>& cum) -> Index {
    const double x = rng.next_double();
    return static_cast<Index>(std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
  };

  std::map<std::uint32_t, double> accum;
  Index accepted = 0;
  std::uint64_t proposals = 0;
  const std::uint64_t max_proposals =
      1000ULL * static_cast<std::uint64_t>(r_sample) * static_cast<std::uint64_t>(kk + 1);
  Vector col(kk);
  while (accepted < r_sample && proposals < max_proposals) {
    ++proposals;
    const Index j = std::min<Index>(draw(cum_u), n1 - 1);
    const Index l = std::min<Index>(draw(cum_v), n2 - 1);
    for (Index i = 0; i < kk; ++i) col[i] = u(i, j) * v(i, l);
    const double tau = std::max(col.dot(gram_pinv * col), 0.0);
    // envelope: k * tau_u(j) * tau_v(l) >= tau
    const double envelope =
        static_cast<double>(kk) * std::max(tau_u[j], 1e-300) * std::max(tau_v[l], 1e-300);
    const double accept = std::min(1.0, tau / envelope);
    if (rng.next_double() < accept) {
      ++accepted;
      const double p = tau / total;
      if (p > 0.0)
        accum[static_cast<std::uint32_t>(j * n2 + l)] +=
            1.0 / (static_cast<double>(r_sample) * p);
    }
  }
  ledger.oracle_calls += proposals;
  if (accepted < r_sample)
    throw ConvergenceError("tensor_leverage_sample: rejection loop starved", 0.0);
  return merge_draws(accum, n1 * n2, "tensor_leverage");
}

WeightedSubset kron_pair_sample(const DenseMatrix& fa, const DenseMatrix& fb, Index r_sample,
                                QueryLedger& ledger, std::uint64_t seed) {
  const Index na = fa.rows(), nb = fb.rows();
  Vector tau_a = exact_leverage(fa);
  Vector tau_b = exact_leverage(fb);
  const double sa = std::max(tau_a.sum(), 1e-300);
  const double sb = std::max(tau_b.sum(), 1e-300);

  std::vector<double> cum_a(static_cast<std::size_t>(na)), cum_b(static_cast<std::size_t>(nb));
  double acc = 0.0;
  for (Index i = 0; i < na; ++i) cum_a[static_cast<std::size_t>(i)] = (acc += tau_a[i] / sa);
  acc = 0.0;
  for (Index i = 0; i < nb; ++i) cum_b[static_cast<std::size_t>(i)] = (acc += tau_b[i] / sb);

  RngStream rng = RngStream(seed).derive("kron_pair_sample");
  auto draw = [&rng](const std::vector<double>& cum) -> Index {
    const double x = rng.next_double();
    return static_cast<Index>(std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
  };

  std::map<std::uint32_t, double> accum;
  for (Index t = 0; t < r_sample; ++t) {
    const Index i = std::min<Index>(draw(cum_a), na - 1);
    const Index j = std::min<Index>(draw(cum_b), nb - 1);
    const double p = (tau_a[i] / sa) * (tau_b[j] / sb);
    if (p > 0.0)
      accum[static_cast<std::uint32_t>(i * nb + j)] += 1.0 / (static_cast<double>(r_sample) * p);
  }
  ledger.oracle_calls += static_cast<std::uint64_t>(r_sample);
  return merge_draws(accum, na * nb, "kron_pair");
}

DenseMatrix response_span_projector(const DenseMatrix& b_sample, Index k) {
  ThinSVD svd = thin_svd(b_sample);
  const Index kk = std::min<Index>(k, svd.rank());
  return svd.U.leftCols(std::max<Index>(kk, 1));
}

DenseMatrix response_sampled_solution(const DenseMatrix& a, const DenseMatrix& b, Index k,
                                      double eps, QueryLedger& ledger, std::uint64_t seed) {
  // Sample columns of b by the ridge leverage scores of its columns.
  const Index r =
      std::min<Index>(b.cols(), static_cast<Index>(std::ceil(static_cast<double>(k) / (eps * eps))));
  Vector tau = exact_ridge_leverage(b.transpose(),
                                    std::min<Index>(k, std::min(b.rows(), b.cols())));
  const double total = std::max(tau.sum(), 1e-300);
  std::vector<double> probs(static_cast<std::size_t>(b.cols()));
  for (Index j = 0; j < b.cols(); ++j)
    probs[static_cast<std::size_t>(j)] = std::min(1.0, static_cast<double>(r) * tau[j] / total);
  std::vector<std::uint32_t> picked =
      qsample(probs, ledger, RngStream(seed).derive("response_sample").next_u64());
  if (picked.empty()) picked.push_back(0);

  DenseMatrix bs(b.rows(), static_cast<Index>(picked.size()));
  for (std::size_t j = 0; j < picked.size(); ++j)
    bs.col(static_cast<Index>(j)) = b.col(static_cast<Index>(picked[j])) /
                                    std::sqrt(probs[picked[j]]);
  DenseMatrix q = response_span_projector(bs, k);
  return q * q.transpose() * b * pseudoinverse(a);
}

namespace {

// Columns of c1 repeated blockwise (each column s2 times) and c2 tiled, so
// pair (i,j) maps to (c1 col i, c2 col j).
DenseMatrix repeat_each(const DenseMatrix& m, Index times) {
  DenseMatrix out(m.rows(), m.cols() * times);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index t = 0; t < times; ++t) out.col(j * times + t) = m.col(j);
  return out;
}

DenseMatrix tile_whole(const DenseMatrix& m, Index times) {
  DenseMatrix out(m.rows(), m.cols() * times);
  for (Index t = 0; t < times; ++t)
    for (Index j = 0; j < m.cols(); ++j) out.col(t * m.cols() + j) = m.col(j);
  return out;
}

// Weighted column gather of a flattening at sampled pair indices.
DenseMatrix gather_flat_columns(const DenseMatrix& flat, const WeightedSubset& ws) {
  DenseMatrix out(flat.rows(), ws.size());
  for (Index j = 0; j < ws.size(); ++j)
    out.col(j) = std::sqrt(ws.weights[static_cast<std::size_t>(j)]) *
                 flat.col(static_cast<Index>(ws.indices[static_cast<std::size_t>(j)]));
  return out;
}

// Rows of the pair-structured design at sampled pair columns:
// entry ((i,j), m) = c1(a_m, i) * c2(b_m, j) for sampled pair m = (a_m, b_m).
DenseMatrix pair_design_columns(const DenseMatrix& c1, const DenseMatrix& c2,
                                const WeightedSubset& ws) {
  const Index s1 = c1.cols(), s2 = c2.cols();
  const Index nb = c2.rows();
  DenseMatrix out(s1 * s2, ws.size());
  for (Index m = 0; m < ws.size(); ++m) {
    const Index pair = static_cast<Index>(ws.indices[static_cast<std::size_t>(m)]);
    const Index a = pair / nb, b = pair % nb;
    const double w = std::sqrt(ws.weights[static_cast<std::size_t>(m)]);
    for (Index i = 0; i < s1; ++i)
      for (Index j = 0; j < s2; ++j) out(i * s2 + j, m) = w * c1(a, i) * c2(b, j);
  }
  return out;
}

Index stage_sample_size(Index base, double eps, double c_stage, Index cap) {
  const double lg = std::log2(std::max(2.0, static_cast<double>(base)));
  return std::min<Index>(
      cap, std::max<Index>(base + 1, static_cast<Index>(std::ceil(
                                         c_stage * (static_cast<double>(base) * lg +
                                                    static_cast<double>(base) / eps)))));
}

}  // namespace

CPFactors bicriteria(const Tensor3& a, Index k, double eps, QueryLedger& ledger,
                     std::uint64_t seed, const TensorOptions& opts) {
  if (!a.all_finite()) throw ContractError("bicriteria: non-finite tensor");
  RngStream rs = RngStream(seed).derive("bicriteria");

  DenseMatrix a1 = flatten(a, 1);
  DenseMatrix a2 = flatten(a, 2);
  DenseMatrix a3 = flatten(a, 3);

  const Index cap1 = std::min(a1.rows(), a1.cols());
  WeightedSubset w1 =
      column_pcp(a1, std::min(k, cap1), eps, opts.delta, ledger, rs.next_u64(), opts.c_pcp);
  WeightedSubset w2 =
      column_pcp(a2, std::min(k, cap1), eps, opts.delta, ledger, rs.next_u64(), opts.c_pcp);

  DenseMatrix c1 = gather_flat_columns(a1, w1);
  DenseMatrix c2 = gather_flat_columns(a2, w2);
  const Index s1 = c1.cols(), s2 = c2.cols();

  const Index d3 = stage_sample_size(s1 * s2, eps, opts.c_stage, a.dims[1] * a.dims[2]);
  WeightedSubset dw3 = kron_pair_sample(c1, c2, d3, ledger, rs.next_u64());

  DenseMatrix b = pair_design_columns(c1, c2, dw3);  // (s1 s2) x |D3|
  DenseMatrix a3d3 = gather_flat_columns(a3, dw3);   // n3 x |D3|
  DenseMatrix what = a3d3 * pseudoinverse(b);        // n3 x (s1 s2)

  CPFactors out;
  out.u = repeat_each(c1, s2);
  out.v = tile_whole(c2, s1);
  out.w = what;
  out.r = s1 * s2;
  return out;
}

CURT crt_select(const Tensor3& a, Index k, double eps, QueryLedger& ledger, std::uint64_t seed,
                const TensorOptions& opts) {
  if (!a.all_finite()) throw ContractError("crt_select: non-finite tensor");
  RngStream rs = RngStream(seed).derive("crt_select");

  DenseMatrix a1 = flatten(a, 1);
  DenseMatrix a2 = flatten(a, 2);
  DenseMatrix a3 = flatten(a, 3);
  const Index n1 = a.dims[0], n2 = a.dims[1], n3 = a.dims[2];

  WeightedSubset w1 =
      column_pcp(a1, std::min(k, std::min(a1.rows(), a1.cols())), eps, opts.delta, ledger,
                 rs.next_u64(), opts.c_pcp);
  WeightedSubset w2 =
      column_pcp(a2, std::min(k, std::min(a2.rows(), a2.cols())), eps, opts.delta, ledger,
                 rs.next_u64(), opts.c_pcp);
  DenseMatrix c1 = gather_flat_columns(a1, w1);
  DenseMatrix c2 = gather_flat_columns(a2, w2);
  const Index s1 = c1.cols(), s2 = c2.cols();

  // Fiber counts beyond twice the mode dimension are linearly redundant, so
  // the theoretical stage sizes are additionally capped there.
  // tubes from pairs over (mode-1, mode-2) factors
  const Index d3 =
      stage_sample_size(s1 * s2, eps, opts.c_stage, std::min<Index>(n1 * n2, 2 * n3));
  WeightedSubset dw3 = kron_pair_sample(c1, c2, d3, ledger, rs.next_u64());
  DenseMatrix m3 = gather_flat_columns(a3, dw3);

  // rows from pairs over (mode-1 subset, sampled tubes)
  const Index d2 = stage_sample_size(s1 * m3.cols(), eps, opts.c_stage,
                                     std::min<Index>(n1 * n3, 2 * n2));
  WeightedSubset dw2 = kron_pair_sample(c1, m3, d2, ledger, rs.next_u64());
  DenseMatrix m2 = gather_flat_columns(a2, dw2);

  // columns from pairs over (sampled rows, sampled tubes)
  const Index d1 = stage_sample_size(m2.cols() * m3.cols(), eps, opts.c_stage,
                                     std::min<Index>(n2 * n3, 2 * n1));
  WeightedSubset dw1 = kron_pair_sample(m2, m3, d1, ledger, rs.next_u64());

  CURT out;
  out.tube_idx = dw3.indices;
  out.row_idx = dw2.indices;
  out.col_idx = dw1.indices;
  out.c = DenseMatrix(n1, static_cast<Index>(out.col_idx.size()));
  for (std::size_t j = 0; j < out.col_idx.size(); ++j)
    out.c.col(static_cast<Index>(j)) = a1.col(static_cast<Index>(out.col_idx[j]));
  out.r = DenseMatrix(n2, static_cast<Index>(out.row_idx.size()));
  for (std::size_t j = 0; j < out.row_idx.size(); ++j)
    out.r.col(static_cast<Index>(j)) = a2.col(static_cast<Index>(out.row_idx[j]));
  out.t = DenseMatrix(n3, static_cast<Index>(out.tube_idx.size()));
  for (std::size_t j = 0; j < out.tube_idx.size(); ++j)
    out.t.col(static_cast<Index>(j)) = a3.col(static_cast<Index>(out.tube_idx[j]));
  return out;
}

Tensor3 best_core(const Tensor3& a, const DenseMatrix& c, const DenseMatrix& r,
                  const DenseMatrix& t) {
  // min_U || U x (c, r, t) - a ||: Kronecker pseudoinverse solution.
  DenseMatrix cp = pseudoinverse(c).transpose();  // n1 x nc
  DenseMatrix rp = pseudoinverse(r).transpose();
  DenseMatrix tp = pseudoinverse(t).transpose();
  return tensor_contract(a, cp, rp, tp);
}

CURT lowrank_to_curt(const Tensor3& a, const CPFactors& factors, double eps,
                     std::uint64_t seed, QueryLedger* ledger) {
  QueryLedger scratch;
  QueryLedger& led = ledger ? *ledger : scratch;
  RngStream rs = RngStream(seed).derive("lowrank_to_curt");

  const Index k = factors.r;
  const Index n1 = a.dims[0], n2 = a.dims[1], n3 = a.dims[2];
  const double lg = std::log2(std::max(2.0, static_cast<double>(k)));
  const Index d_formula = std::max<Index>(
      k + 1, static_cast<Index>(std::ceil(static_cast<double>(k) * lg +
                                          static_cast<double>(k) / eps)));
  // More fibers than twice a mode dimension buy nothing; keep the core small.
  const Index d = std::min<Index>(
      d_formula, std::max<Index>(k + 1, 2 * std::max({n1, n2, n3})));

  DenseMatrix a1 = flatten(a, 1);
  DenseMatrix a2 = flatten(a, 2);
  DenseMatrix a3 = flatten(a, 3);

  auto solve_stage = [&](const DenseMatrix& f1, const DenseMatrix& f2, const DenseMatrix& flat,
                         Index cap, WeightedSubset& ws_out,
                         DenseMatrix& bd_pinv) -> DenseMatrix {
    // sample columns of f1^T (.) f2^T, solve flat D (B D)^+
    for (int attempt = 0; attempt < 2; ++attempt) {
      WeightedSubset ws = tensor_leverage_sample(
          f1.transpose(), f2.transpose(), std::min<Index>(d, cap), eps, led, rs.next_u64());
      DenseMatrix bd(k, ws.size());
      const Index nb = f2.rows();
      for (Index m = 0; m < ws.size(); ++m) {
        const Index pair = static_cast<Index>(ws.indices[static_cast<std::size_t>(m)]);
        const Index i = pair / nb, j = pair % nb;
        const double w = std::sqrt(ws.weights[static_cast<std::size_t>(m)]);
        for (Index q = 0; q < k; ++q) bd(q, m) = w * f1(i, q) * f2(j, q);
      }
      if (thin_svd(bd).rank() < std::min<Index>(k, bd.cols()) && attempt == 0) continue;
      DenseMatrix flat_d = gather_flat_columns(flat, ws);
      bd_pinv = pseudoinverse(bd);
      ws_out = ws;
      return flat_d * bd_pinv;  // n x k
    }
    throw ConvergenceError("lowrank_to_curt: sampled design stayed singular", 0.0);
  };

  WeightedSubset ws1, ws2, ws3;
  DenseMatrix b1d_pinv, b2d_pinv, b3d_pinv;
  DenseMatrix uhat = solve_stage(factors.v, factors.w, a1, n2 * n3, ws1, b1d_pinv);
  DenseMatrix vhat = solve_stage(uhat, factors.w, a2, n1 * n3, ws2, b2d_pinv);
  DenseMatrix what_unused = solve_stage(uhat, vhat, a3, n1 * n2, ws3, b3d_pinv);
  (void)what_unused;

  CURT out;
  out.col_idx = ws1.indices;
  out.row_idx = ws2.indices;
  out.tube_idx = ws3.indices;
  out.c = DenseMatrix(n1, static_cast<Index>(ws1.size()));
  for (Index j = 0; j < ws1.size(); ++j)
    out.c.col(j) = a1.col(static_cast<Index>(ws1.indices[static_cast<std::size_t>(j)]));
  out.r = DenseMatrix(n2, static_cast<Index>(ws2.size()));
  for (Index j = 0; j < ws2.size(); ++j)
    out.r.col(j) = a2.col(static_cast<Index>(ws2.indices[static_cast<std::size_t>(j)]));
  out.t = DenseMatrix(n3, static_cast<Index>(ws3.size()));
  for (Index j = 0; j < ws3.size(); ++j)
    out.t.col(j) = a3.col(static_cast<Index>(ws3.indices[static_cast<std::size_t>(j)]));

  // Core from the sampled design pseudoinverses; the sampling weights cancel
  // against the weighted fiber gathers, so scale columns back to verbatim.
  DenseMatrix p1 = b1d_pinv;  // |D1| x k
  DenseMatrix p2 = b2d_pinv;
  DenseMatrix p3 = b3d_pinv;
  for (Index j = 0; j < p1.rows(); ++j)
    p1.row(j) *= std::sqrt(ws1.weights[static_cast<std::size_t>(j)]);
  for (Index j = 0; j < p2.rows(); ++j)
    p2.row(j) *= std::sqrt(ws2.weights[static_cast<std::size_t>(j)]);
  for (Index j = 0; j < p3.rows(); ++j)
    p3.row(j) *= std::sqrt(ws3.weights[static_cast<std::size_t>(j)]);

  out.core = Tensor3(p1.rows(), p2.rows(), p3.rows());
  for (Index q = 0; q < k; ++q)
    for (Index i = 0; i < p1.rows(); ++i) {
      const double pi = p1(i, q);
      if (pi == 0.0) continue;
      for (Index j = 0; j < p2.rows(); ++j) {
        const double pij = pi * p2(j, q);
        if (pij == 0.0) continue;
        for (Index l = 0; l < p3.rows(); ++l) out.core(i, j, l) += pij * p3(l, q);
      }
    }
  out.has_core = true;
  return out;
}

ReducedProblem sublinear_reduction(const Tensor3& a, const DenseMatrix& v1,
                                   const DenseMatrix& v2, const DenseMatrix& v3, Index k,
                                   double eps, QueryLedger& ledger, std::uint64_t seed,
                                   double c_reduce) {
  RngStream rs = RngStream(seed).derive("sublinear_reduction");
  auto stage = [&](const DenseMatrix& v, Index cap, std::vector<std::uint32_t>& rows_out,
                   DenseMatrix& y_out) {
    const Index b = v.cols();
    const double lg = std::log2(std::max(2.0, static_cast<double>(b)));
    const Index c = std::min<Index>(
        cap, std::max<Index>(b + 1, static_cast<Index>(std::ceil(
                                        c_reduce * (static_cast<double>(b) * lg +
                                                    static_cast<double>(b) / eps)))));
    WeightedSubset ws = qls(v, c, 0.001, ledger, rs.next_u64());
    rows_out = ws.indices;
    y_out = ws.gather(v, 2.0);
    return ws;
  };
  (void)k;

  ReducedProblem out;
  WeightedSubset t1 = stage(v1, a.dims[0], out.rows1, out.y1);
  WeightedSubset t2 = stage(v2, a.dims[1], out.rows2, out.y2);
  WeightedSubset t3 = stage(v3, a.dims[2], out.rows3, out.y3);

  out.c = Tensor3(t1.size(), t2.size(), t3.size());
  for (Index i = 0; i < t1.size(); ++i)
    for (Index j = 0; j < t2.size(); ++j)
      for (Index l = 0; l < t3.size(); ++l)
        out.c(i, j, l) = std::sqrt(t1.weights[static_cast<std::size_t>(i)] *
                                   t2.weights[static_cast<std::size_t>(j)] *
                                   t3.weights[static_cast<std::size_t>(l)]) *
                         a(static_cast<Index>(t1.indices[static_cast<std::size_t>(i)]),
                           static_cast<Index>(t2.indices[static_cast<std::size_t>(j)]),
                           static_cast<Index>(t3.indices[static_cast<std::size_t>(l)]));
  ledger.classical_entry_reads += static_cast<std::uint64_t>(t1.size()) *
                                  static_cast<std::uint64_t>(t2.size()) *
                                  static_cast<std::uint64_t>(t3.size());
  return out;
}

AlsResult als_cp(const Tensor3& c, const DenseMatrix& y1, const DenseMatrix& y2,
                 const DenseMatrix& y3, Index k, int restarts, int iters, std::uint64_t seed) {
  const Index b1 = y1.cols(), b2 = y2.cols(), b3 = y3.cols();
  DenseMatrix c1 = flatten(c, 1), c2 = flatten(c, 2), c3 = flatten(c, 3);
  const double norm_sq = c.squared_frobenius();

  DenseMatrix y1p = pseudoinverse(y1), y2p = pseudoinverse(y2), y3p = pseudoinverse(y3);
  RngStream root = RngStream(seed).derive("als_cp");

  AlsResult best;
  best.residual_sq = std::numeric_limits<double>::infinity();

  for (int rstart = 0; rstart < restarts; ++rstart) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(rstart));
    auto rnd = [&](Index rows, Index cols) {
      DenseMatrix m(rows, cols);
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
      return m;
    };
    DenseMatrix x1 = rnd(b1, k), x2 = rnd(b2, k), x3 = rnd(b3, k);
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < iters; ++it) {
      DenseMatrix f2 = y2 * x2, f3 = y3 * x3;
      // row i of z1 = (Y2 X2)_i (x) (Y3 X3)_i
      DenseMatrix z1 = khatri_rao_rows(DenseMatrix(f2.transpose()), DenseMatrix(f3.transpose()));
      x1 = y1p * c1 * pseudoinverse(z1);
      DenseMatrix f1 = y1 * x1;
      DenseMatrix z2 = khatri_rao_rows(DenseMatrix(f1.transpose()), DenseMatrix(f3.transpose()));
      x2 = y2p * c2 * pseudoinverse(z2);
      f2 = y2 * x2;
      DenseMatrix z3 = khatri_rao_rows(DenseMatrix(f1.transpose()), DenseMatrix(f2.transpose()));
      x3 = y3p * c3 * pseudoinverse(z3);
      f3 = y3 * x3;

      const double resid =
          (f1 * khatri_rao_rows(DenseMatrix(f2.transpose()), DenseMatrix(f3.transpose())) - c1)
              .squaredNorm();
      if (prev - resid <= 1e-10 * std::max(norm_sq, 1.0)) {
        converged = true;
        prev = resid;
        break;
      }
      prev = resid;
    }
    if (prev < best.residual_sq) {
      best.residual_sq = prev;
      best.x1 = x1;
      best.x2 = x2;
      best.x3 = x3;
      best.stagnated = !converged;
    }
  }
  return best;
}

CPFactors fpt_lowrank(const Tensor3& a, Index k, double eps, QueryLedger& ledger,
                      std::uint64_t seed, const TensorOptions& opts) {
  if (!a.all_finite()) throw ContractError("fpt_lowrank: non-finite tensor");
  RngStream rs = RngStream(seed).derive("fpt_lowrank");

  DenseMatrix a1 = flatten(a, 1);
  DenseMatrix a2 = flatten(a, 2);
  DenseMatrix a3 = flatten(a, 3);

  WeightedSubset w1 =
      column_pcp(a1, std::min(k, std::min(a1.rows(), a1.cols())), eps, opts.delta, ledger,
                 rs.next_u64(), opts.c_pcp);
  WeightedSubset w2 =
      column_pcp(a2, std::min(k, std::min(a2.rows(), a2.cols())), eps, opts.delta, ledger,
                 rs.next_u64(), opts.c_pcp);
  DenseMatrix c1 = gather_flat_columns(a1, w1);
  DenseMatrix c2 = gather_flat_columns(a2, w2);

  const Index d3 =
      stage_sample_size(c1.cols() * c2.cols(), eps, opts.c_stage, a.dims[1] * a.dims[2]);
  WeightedSubset dw3 = kron_pair_sample(c1, c2, d3, ledger, rs.next_u64());
  DenseMatrix m3 = gather_flat_columns(a3, dw3);

  ReducedProblem red = sublinear_reduction(a, c1, c2, m3, k, eps, ledger, rs.next_u64());
  AlsResult als = als_cp(red.c, red.y1, red.y2, red.y3, k, opts.als_restarts, opts.als_iters,
                         rs.next_u64());

  CPFactors out;
  out.u = c1 * als.x1;
  out.v = c2 * als.x2;
  out.w = m3 * als.x3;
  out.r = k;
  out.certified = !als.stagnated;
  return out;
}

}  // namespace coresketch
