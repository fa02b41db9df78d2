#include "coresketch/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/rng.hpp"
#include "coresketch/sampler.hpp"
#include "coresketch/weights.hpp"

namespace coresketch {

double KernelSpec::eval_free(Index i, Index j) const {
  switch (kind) {
    case Kind::kLinear:
      return points.row(i).dot(points.row(j));
    case Kind::kPolynomial:
      return std::pow(points.row(i).dot(points.row(j)) + 1.0, degree);
    case Kind::kRbf:
      return std::exp(-gamma * (points.row(i) - points.row(j)).squaredNorm());
    case Kind::kCustom:
      return custom(points.row(i).transpose(), points.row(j).transpose());
  }
  return 0.0;
}

DenseMatrix KernelSpec::dense_free() const {
  const Index m = n();
  DenseMatrix k(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = eval_free(i, j);
  return k;
}

FactoredColumns::FactoredColumns(const KernelSpec& spec, std::vector<std::uint32_t> idx,
                                 Vector column_scale)
    : spec_(&spec), idx_(std::move(idx)), scale_(std::move(column_scale)),
      cache_(static_cast<std::size_t>(spec.n())) {}

const Vector& FactoredColumns::row(Index i, QueryLedger& ledger) const {
  auto& slot = cache_[static_cast<std::size_t>(i)];
  if (!slot) {
    Vector v(cols());
    for (Index j = 0; j < cols(); ++j)
      v[j] = scale_[j] * spec_->eval(i, static_cast<Index>(idx_[static_cast<std::size_t>(j)]),
                                     ledger);
    slot = std::move(v);
  }
  return *slot;
}

DenseMatrix FactoredColumns::materialize(QueryLedger& ledger) const {
  DenseMatrix out(spec_->n(), cols());
  for (Index i = 0; i < spec_->n(); ++i) out.row(i) = row(i, ledger).transpose();
  return out;
}

WeightedSubset qnystrom(const KernelSpec& spec, Index s, double delta, QueryLedger& ledger,
                        std::uint64_t seed, const NystromOptions& opts) {
  const Index n = spec.n();
  if (s < 1 || s > n) throw ContractError("qnystrom: sample size out of range");

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kColumns;
  out.scheme = "nystrom";

  if (s == n) {
    for (Index i = 0; i < n; ++i) {
      out.indices.push_back(static_cast<std::uint32_t>(i));
      out.weights.push_back(1.0);
    }
    return out;
  }

  const Index s_mid = opts.intermediate > 0 ? std::min(opts.intermediate, s) : s;

  // Largest k with c k log2(2k/delta) <= s, floored at min_rank.
  Index k_rank = opts.min_rank;
  for (Index k = opts.min_rank; k <= s; ++k) {
    if (opts.c_rank * static_cast<double>(k) *
            std::log2(std::max(2.0, 2.0 * static_cast<double>(k) / delta)) <=
        static_cast<double>(s))
      k_rank = k;
    else
      break;
  }

  RngStream rs = RngStream(seed).derive("qnystrom");
  HalvingChain chain =
      halving_chain(static_cast<std::size_t>(n), static_cast<std::size_t>(s_mid), rs.next_u64());
  const std::size_t depth = chain.depth() - 1;

  // Current sample: indices + sqrt-scale weights for the block.
  std::vector<std::uint32_t> cur = chain.levels[0];
  Vector cur_scale = Vector::Ones(static_cast<Index>(cur.size()));

  for (std::size_t t = std::min<std::size_t>(1, depth); t <= depth; ++t) {
    const bool final_level = (t == depth);
    const Index target = final_level ? s : s_mid;
    const auto& level = chain.levels[t];
    const Index m = static_cast<Index>(cur.size());

    // Weighted kernel block of the current sample.
    DenseMatrix block(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j <= i; ++j) {
        const double v = cur_scale[i] * cur_scale[j] *
                         spec.eval(static_cast<Index>(cur[static_cast<std::size_t>(i)]),
                                   static_cast<Index>(cur[static_cast<std::size_t>(j)]), ledger);
        block(i, j) = block(j, i) = v;
      }

    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(block);
    Vector eig = es.eigenvalues().cwiseMax(0.0);  // clamp numerically indefinite blocks
    double lambda = 0.0;
    for (Index i = 0; i < eig.size() - std::min<Index>(k_rank, eig.size()); ++i)
      lambda += eig[i];  // eigenvalues ascend; tail beyond the top k_rank
    lambda /= static_cast<double>(k_rank);
    lambda = std::max(lambda, 1e-12 * std::max(eig.maxCoeff(), 1.0));

    DenseMatrix reg = block + lambda * DenseMatrix::Identity(m, m);
    DenseMatrix mhat = reg.ldlt().solve(DenseMatrix::Identity(m, m));

    // Ridge residual scores for every point at this level.
    std::vector<double> q(level.size());
    for (std::size_t i = 0; i < level.size(); ++i) {
      const Index pt = static_cast<Index>(level[i]);
      Vector ki(m);
      for (Index j = 0; j < m; ++j)
        ki[j] = cur_scale[j] *
                spec.eval(pt, static_cast<Index>(cur[static_cast<std::size_t>(j)]), ledger);
      const double diag = spec.eval(pt, pt, ledger);
      double qi = (5.0 / lambda) * (diag - ki.dot(mhat * ki));
      if (qi < -1e-8 * std::max(diag, 1.0))
        throw ContractError("qnystrom: kernel violated positive semidefiniteness");
      q[i] = std::max(qi, 0.0);
    }

    std::vector<double> probs(q.size());
    if (opts.paper_rate) {
      const double mult = 16.0 * std::log2(std::max(2.0, 2.0 * static_cast<double>(k_rank) / delta));
      for (std::size_t i = 0; i < q.size(); ++i) probs[i] = std::min(1.0, mult * q[i]);
    } else {
      double sum_q = 0.0;
      for (double v : q) sum_q += v;
      const double theta = sum_q > 0.0 ? static_cast<double>(target) / sum_q : 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) probs[i] = std::min(1.0, theta * q[i]);
    }

    std::vector<std::uint32_t> picked = qsample(probs, ledger, rs.next_u64());
    if (picked.empty()) {
      // Degenerate scores: fall back to keeping the current sample.
      picked.resize(std::min<std::size_t>(level.size(), static_cast<std::size_t>(target)));
      for (std::size_t i = 0; i < picked.size(); ++i) picked[i] = static_cast<std::uint32_t>(i);
      for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = 1.0;
    }

    std::vector<std::uint32_t> next;
    Vector next_scale(static_cast<Index>(picked.size()));
    for (std::size_t i = 0; i < picked.size(); ++i) {
      next.push_back(level[picked[i]]);
      next_scale[static_cast<Index>(i)] = 1.0 / std::sqrt(probs[picked[i]]);
    }

    if (final_level) {
      for (std::size_t i = 0; i < next.size(); ++i) {
        out.indices.push_back(next[i]);
        const double sc = next_scale[static_cast<Index>(i)];
        out.weights.push_back(sc * sc);
      }
      return out;
    }
    cur = std::move(next);
    cur_scale = std::move(next_scale);
  }

  // depth == 0: single level, keep everything.
  for (Index i = 0; i < n; ++i) {
    out.indices.push_back(static_cast<std::uint32_t>(i));
    out.weights.push_back(1.0);
  }
  return out;
}

namespace {

FactoredColumns subset_columns(const KernelSpec& spec, const WeightedSubset& ws) {
  Vector scale(ws.size());
  for (Index j = 0; j < ws.size(); ++j)
    scale[j] = std::sqrt(ws.weights[static_cast<std::size_t>(j)]);
  return FactoredColumns(spec, ws.indices, scale);
}

}  // namespace

FactoredLowRank qlowrank_kernel(const KernelSpec& spec, Index k, double eps, double delta,
                                QueryLedger& ledger, std::uint64_t seed,
                                const KernelLowRankOptions& opts) {
  const Index n = spec.n();
  if (k < 1 || k > n) throw ContractError("qlowrank_kernel: k out of range");
  if (!(eps > 0.0 && eps < 1.0)) throw ContractError("qlowrank_kernel: eps out of range");

  const Index kp = std::max<Index>(k, static_cast<Index>(std::ceil(k / eps)));
  RngStream root = RngStream(seed).derive("qlowrank_kernel");

  for (int attempt = 0; attempt < 2; ++attempt) {
    RngStream rs = root.derive(static_cast<std::uint64_t>(attempt));

    const Index t = std::min<Index>(
        n, std::max<Index>(3 * kp,
                           static_cast<Index>(std::ceil(
                               opts.c_landmarks *
                               std::sqrt(static_cast<double>(n) * static_cast<double>(k) / eps)))));
    NystromOptions nyopts;
    nyopts.intermediate = opts.ny_intermediate;
    WeightedSubset d1 = qnystrom(spec, t, delta / 6.0, ledger, rs.next_u64(), nyopts);
    WeightedSubset d2 = qnystrom(spec, t, delta / 6.0, ledger, rs.next_u64(), nyopts);

    FactoredColumns c_cols = subset_columns(spec, d1);

    // Small cross block R = D2^T K D1.
    DenseMatrix r(d2.size(), d1.size());
    for (Index i = 0; i < d2.size(); ++i)
      for (Index j = 0; j < d1.size(); ++j)
        r(i, j) = std::sqrt(d2.weights[static_cast<std::size_t>(i)]) *
                  std::sqrt(d1.weights[static_cast<std::size_t>(j)]) *
                  spec.eval(static_cast<Index>(d2.indices[static_cast<std::size_t>(i)]),
                            static_cast<Index>(d1.indices[static_cast<std::size_t>(j)]), ledger);

    // Row-space basis of rank kp for R, through a projection-cost preserving
    // column subset of R.
    const Index kp_eff = std::min<Index>(kp, std::min(r.rows(), r.cols()));
    WeightedSubset rcols = column_pcp(r, kp_eff, 0.01, delta / 6.0, ledger, rs.next_u64(), 1.0);
    DenseMatrix rtil = rcols.gather(r.transpose(), 2.0).transpose();  // |D2| x sel
    ThinSVD rsvd = thin_svd(rtil);
    const Index kq = std::min<Index>(kp_eff, rsvd.rank());
    DenseMatrix q = rsvd.U.leftCols(kq);
    ThinSVD zsvd = thin_svd(DenseMatrix((q.transpose() * r).transpose()));
    const Index kz = std::min<Index>(kq, zsvd.rank());
    DenseMatrix z = zsvd.U.leftCols(kz);  // |D1| x kz row-space basis

    // Sample rows of Z (columns of the regression) by rescaled row norms.
    const Index d3_target = std::min<Index>(z.rows(), 2 * kp);
    {
      double zsum = z.squaredNorm();
      std::vector<double> probs(static_cast<std::size_t>(z.rows()));
      const double theta = zsum > 0.0 ? static_cast<double>(d3_target) / zsum : 0.0;
      for (Index i = 0; i < z.rows(); ++i)
        probs[static_cast<std::size_t>(i)] = std::min(1.0, theta * z.row(i).squaredNorm());
      std::vector<std::uint32_t> picked = qsample(probs, ledger, rs.next_u64());
      if (picked.size() < static_cast<std::size_t>(kz)) {
        if (attempt == 0) continue;
        throw ConvergenceError("qlowrank_kernel: norm sampling collapsed", 0.0);
      }
      // Restrict the factored columns and Z to the picked subset.
      std::vector<std::uint32_t> sub_idx;
      Vector sub_scale(static_cast<Index>(picked.size()));
      DenseMatrix zd(static_cast<Index>(picked.size()), kz);
      for (std::size_t i = 0; i < picked.size(); ++i) {
        const std::uint32_t pos = picked[i];
        sub_idx.push_back(d1.indices[pos]);
        sub_scale[static_cast<Index>(i)] =
            std::sqrt(d1.weights[pos]) / std::sqrt(probs[pos]);
        zd.row(static_cast<Index>(i)) = z.row(static_cast<Index>(pos)) / std::sqrt(probs[pos]);
      }
      c_cols = FactoredColumns(spec, sub_idx, sub_scale);
      z = std::move(zd);
    }

    // W = K D1 D3 (Z^T D3)^+ in factored form; materialize its rows once.
    DenseMatrix zpinv = pseudoinverse(z.transpose());  // |D3| x kz
    DenseMatrix kd = c_cols.materialize(ledger);       // n x |D3|
    DenseMatrix w = kd * zpinv;                        // n x kz

    if (thin_svd(w).rank() < std::min<Index>(k, kz)) {
      if (attempt == 0) continue;
      throw ConvergenceError("qlowrank_kernel: regression basis lost rank", 0.0);
    }

    const Index d45 = std::min<Index>(
        n, std::max<Index>(k + 1, static_cast<Index>(std::ceil(opts.c_rows * kp / eps))));
    WeightedSubset d4 = qls(w, d45, delta / 6.0, ledger, rs.next_u64());
    WeightedSubset d5 = qls(w, d45, delta / 6.0, ledger, rs.next_u64());

    DenseMatrix d4w = d4.gather(w, 2.0);
    DenseMatrix wd5 = d5.gather(w, 2.0).transpose();
    DenseMatrix d4kd5(d4.size(), d5.size());
    for (Index i = 0; i < d4.size(); ++i)
      for (Index j = 0; j < d5.size(); ++j)
        d4kd5(i, j) = std::sqrt(d4.weights[static_cast<std::size_t>(i)]) *
                      std::sqrt(d5.weights[static_cast<std::size_t>(j)]) *
                      spec.eval(static_cast<Index>(d4.indices[static_cast<std::size_t>(i)]),
                                static_cast<Index>(d5.indices[static_cast<std::size_t>(j)]),
                                ledger);

    DenseMatrix ystar = generalized_lowrank(d4kd5, d4w, wd5, k);
    ThinSVD ysvd = thin_svd(ystar);
    const Index kk = std::min<Index>(k, ysvd.rank());
    DenseMatrix ustar = ysvd.U.leftCols(kk);

    DenseMatrix m = w * ustar;  // n x kk
    const Index d6 = std::min<Index>(
        n, std::max<Index>(kk + 1,
                           static_cast<Index>(std::ceil(
                               opts.c_final * (static_cast<double>(k) *
                                                   std::log2(std::max(2.0, double(k))) +
                                               static_cast<double>(k) / eps)))));
    WeightedSubset d6s = qls(m, d6, delta / 6.0, ledger, rs.next_u64());

    DenseMatrix d6m = d6s.gather(m, 2.0);
    DenseMatrix d6k(d6s.size(), n);
    for (Index i = 0; i < d6s.size(); ++i) {
      const Index pt = static_cast<Index>(d6s.indices[static_cast<std::size_t>(i)]);
      const double sc = std::sqrt(d6s.weights[static_cast<std::size_t>(i)]);
      for (Index j = 0; j < n; ++j) d6k(i, j) = sc * spec.eval(pt, j, ledger);
    }
    DenseMatrix nfac = sampled_regression(d6m, d6k);  // kk x n

    FactoredLowRank out;
    out.k = k;
    out.left = m;
    out.right = nfac.transpose();
    if (kk < k) {
      DenseMatrix l = DenseMatrix::Zero(n, k), rr = DenseMatrix::Zero(n, k);
      l.leftCols(kk) = out.left;
      rr.leftCols(kk) = out.right;
      out.left = l;
      out.right = rr;
    }
    return out;
  }
  throw ConvergenceError("qlowrank_kernel: unreachable", 0.0);
}

}  // namespace coresketch
