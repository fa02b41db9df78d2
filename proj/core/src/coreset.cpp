#include "coresketch/coreset.hpp"

#include <algorithm>
#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/sampler.hpp"

namespace coresketch {

DenseMatrix WeightedSubset::gather(const DenseMatrix& a, double cost_exponent) const {
  const bool rows = (axis == Axis::kRows);
  const Index d = rows ? a.cols() : a.rows();
  DenseMatrix out(size(), d);
  for (Index j = 0; j < size(); ++j) {
    const Index idx = static_cast<Index>(indices[static_cast<std::size_t>(j)]);
    const double w = std::pow(weights[static_cast<std::size_t>(j)], 1.0 / cost_exponent);
    if (rows)
      out.row(j) = w * a.row(idx);
    else
      out.row(j) = w * a.col(idx).transpose();
  }
  return out;
}

WeightOracleState preprocess_scheme(const DenseMatrix& coreset_matrix, const SchemeConfig& cfg,
                                    Index n_total, std::uint64_t seed) {
  switch (cfg.scheme) {
    case WeightScheme::kL2:
      return leverage_preprocess(coreset_matrix, n_total, cfg.jl_factor, seed);
    case WeightScheme::kLp:
      return lewis_preprocess(coreset_matrix, cfg.p, n_total, cfg.jl_factor, seed,
                              cfg.lewis_tol, cfg.lewis_max_iter);
    case WeightScheme::kRidge:
      return ridge_preprocess(coreset_matrix, cfg.k, n_total, cfg.jl_factor, seed,
                              cfg.ridge_alg6_literal);
  }
  throw ContractError("preprocess_scheme: unknown scheme");
}

namespace {

constexpr double kHugeWeight = 1e200;

double cost_exponent(const SchemeConfig& cfg) {
  return cfg.scheme == WeightScheme::kLp ? cfg.p : 2.0;
}

// Overestimation guard for sampling against an approximator instead of the
// point set itself.
double approximator_guard(const SchemeConfig& cfg, double level_eps) {
  const double base = 1.0 / (1.0 - level_eps);
  return cfg.scheme == WeightScheme::kLp ? std::pow(base, cfg.p / 2.0) : base;
}

struct LevelDraw {
  std::vector<std::uint32_t> picked;  // positions into the level's index list
  std::vector<double> probs;          // per-position inclusion probabilities
};

LevelDraw draw_level(const std::vector<double>& scores, Index target, double oversample,
                     QueryLedger& ledger, std::uint64_t seed) {
  const std::size_t m = scores.size();
  std::vector<double> probs(m, 0.0);
  double finite_sum = 0.0;
  Index saturated = 0;
  for (double v : scores) {
    if (v >= kHugeWeight)
      ++saturated;
    else
      finite_sum += v;
  }
  const double budget = std::max(0.0, oversample * static_cast<double>(target - saturated));
  const double c = finite_sum > 0.0 ? budget / finite_sum : 0.0;
  for (std::size_t i = 0; i < m; ++i)
    probs[i] = scores[i] >= kHugeWeight ? 1.0 : std::min(1.0, c * scores[i]);

  LevelDraw out;
  out.picked = qsample(probs, ledger, seed);
  out.probs = std::move(probs);
  return out;
}

}  // namespace

WeightedSubset iterate_sample(const DenseMatrix& a, const SchemeConfig& cfg, Index s,
                              Index s_mid, QueryLedger& ledger, std::uint64_t seed) {
  require_finite(a, "iterate_sample");
  const Index n = a.rows();
  if (s < 1 || s_mid < 1) throw ContractError("iterate_sample: target sizes must be positive");
  s_mid = std::min(s_mid, n);

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kRows;
  out.scheme = cfg.scheme == WeightScheme::kL2   ? "l2"
               : cfg.scheme == WeightScheme::kLp ? "lewis"
                                                 : "ridge";

  if (n <= s) {
    out.indices.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.indices[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
    out.weights.assign(static_cast<std::size_t>(n), 1.0);
    return out;
  }

  RngStream root = RngStream(seed).derive("iterate_sample");
  const double expo = cost_exponent(cfg);

  for (int attempt = 0; attempt < 4; ++attempt) {
    const double boost = std::pow(2.0, attempt);
    RngStream rs = root.derive(static_cast<std::uint64_t>(attempt));
    HalvingChain chain = halving_chain(static_cast<std::size_t>(n),
                                       static_cast<std::size_t>(s_mid), rs.next_u64());
    const std::size_t depth = chain.depth() - 1;

    // Bottom level taken whole with unit weights.
    DenseMatrix current(static_cast<Index>(chain.levels[0].size()), a.cols());
    for (std::size_t i = 0; i < chain.levels[0].size(); ++i)
      current.row(static_cast<Index>(i)) = a.row(static_cast<Index>(chain.levels[0][i]));

    for (std::size_t t = std::min<std::size_t>(1, depth); t <= depth; ++t) {
      const bool final_level = (t == depth);
      const Index target = final_level ? s : s_mid;
      const double over = (final_level ? cfg.c_final : cfg.c_intermediate) * boost;
      const auto& level = chain.levels[t];

      WeightOracleState oracle = preprocess_scheme(current, cfg, n, rs.next_u64());
      const double guard = approximator_guard(cfg, cfg.intermediate_eps);

      std::vector<double> scores(level.size());
      for (std::size_t i = 0; i < level.size(); ++i) {
        const double q = oracle.query_row(a, static_cast<Index>(level[i]));
        scores[i] = std::isfinite(q) ? q * guard : kHugeWeight;
      }

      LevelDraw draw = draw_level(scores, target, over, ledger, rs.next_u64());
      if (draw.picked.empty()) break;  // restart with doubled oversampling

      if (final_level) {
        out.indices.clear();
        out.weights.clear();
        for (std::uint32_t pos : draw.picked) {
          out.indices.push_back(level[pos]);
          out.weights.push_back(1.0 / draw.probs[pos]);
        }
        return out;
      }
      DenseMatrix next(static_cast<Index>(draw.picked.size()), a.cols());
      for (std::size_t i = 0; i < draw.picked.size(); ++i) {
        const std::uint32_t pos = draw.picked[i];
        const double w = std::pow(1.0 / draw.probs[pos], 1.0 / expo);
        next.row(static_cast<Index>(i)) = w * a.row(static_cast<Index>(level[pos]));
      }
      current = std::move(next);
    }
  }
  throw ConvergenceError("iterate_sample: sampler returned empty levels after restarts", 0.0);
}

WeightedSubset l2_coreset(const DenseMatrix& a, double eps, double delta, QueryLedger& ledger,
                          std::uint64_t seed) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw ContractError("l2_coreset: eps and delta must lie in (0,1)");
  const Index n = a.rows(), d = a.cols();
  const double logterm = std::log(std::max(2.0, static_cast<double>(d) / delta));
  const Index s = std::min<Index>(
      n, static_cast<Index>(std::ceil(2.0 / (eps * eps) * static_cast<double>(d) * logterm)));
  const Index s_mid =
      std::min<Index>(n, std::max<Index>(d + 1, static_cast<Index>(std::ceil(
                                                    2.0 * static_cast<double>(d) * logterm))));
  SchemeConfig cfg;
  cfg.scheme = WeightScheme::kL2;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.vc_dim = d + 1;
  return iterate_sample(a, cfg, s, s_mid, ledger, seed);
}

namespace {

double lp_alpha(double p, Index n, Index d, double eps, double delta) {
  const double ln_d = std::log(std::max(2.0, static_cast<double>(d)));
  const double ln_n = std::log(std::max(2.0, static_cast<double>(n)));
  const double inv_e2 = 1.0 / (eps * eps);
  if (p < 1.0) return inv_e2 * (ln_d * ln_d * ln_d + std::log(1.0 / delta));
  if (p == 1.0) return inv_e2 * std::log(static_cast<double>(n) / delta);
  if (p < 2.0) return inv_e2 * (ln_d * ln_d * ln_n + std::log(1.0 / delta));
  return inv_e2 * std::pow(static_cast<double>(d), p / 2.0 - 1.0) *
         (ln_d * ln_d * ln_n + std::log(1.0 / delta));
}

}  // namespace

WeightedSubset lp_coreset(const DenseMatrix& a, double p, double eps, double delta,
                          QueryLedger& ledger, std::uint64_t seed, double alpha_constant) {
  if (p <= 0.0) throw ContractError("lp_coreset: p must be positive");
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw ContractError("lp_coreset: eps and delta must lie in (0,1)");
  const Index n = a.rows(), d = a.cols();

  RngStream root = RngStream(seed).derive("lp_coreset");

  // Stage 1: constant-accuracy approximator.
  SchemeConfig cfg;
  cfg.scheme = WeightScheme::kLp;
  cfg.p = p;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.vc_dim = d + 1;
  const double dim_pow = std::pow(static_cast<double>(d), std::max(p / 2.0, 1.0) + 1.0);
  const Index s1 = std::min<Index>(
      n, std::max<Index>(2 * d, static_cast<Index>(std::ceil(
                                    dim_pow * std::log2(std::max(2.0, double(d)))))));
  WeightedSubset approx = iterate_sample(a, cfg, s1, s1, ledger, root.next_u64());

  if (static_cast<Index>(approx.size()) >= n) {
    approx.scheme = "lewis";
    return approx;  // degenerate scale: the approximator is the whole set
  }

  // Stage 2: sample every row at the p-regime rate against the approximator.
  DenseMatrix b = approx.gather(a, p);
  WeightOracleState oracle =
      lewis_preprocess(b, p, n, cfg.jl_factor, root.next_u64(), cfg.lewis_tol, cfg.lewis_max_iter);
  const double guard = std::pow(1.0 / (1.0 - cfg.intermediate_eps), p / 2.0);
  const double alpha = alpha_constant * lp_alpha(p, n, d, eps, delta);

  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double u = oracle.query_row(a, i) * guard;
    probs[static_cast<std::size_t>(i)] = std::min(1.0, alpha * u);
  }
  std::vector<std::uint32_t> picked = qsample(probs, ledger, root.next_u64());

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kRows;
  out.scheme = "lewis";
  for (std::uint32_t idx : picked) {
    out.indices.push_back(idx);
    out.weights.push_back(1.0 / probs[idx]);
  }
  if (out.indices.empty())
    throw ConvergenceError("lp_coreset: final sample came back empty", 0.0);
  return out;
}

WeightedSubset kp_subspace_sample(const DenseMatrix& a, Index k, double p, double eps,
                                  QueryLedger& ledger, std::uint64_t seed,
                                  double alpha_constant) {
  if (p < 1.0) throw ContractError("kp_subspace_sample: p must be >= 1");
  if (k < 1 || k > a.cols()) throw ContractError("kp_subspace_sample: k out of range");
  const Index n = a.rows();

  const Index s_ridge =
      p >= 2.0 ? static_cast<Index>(std::ceil(static_cast<double>(k) / std::pow(eps, p)))
               : static_cast<Index>(std::ceil(static_cast<double>(k) / (eps * eps)));
  Vector tau = exact_ridge_leverage(a, std::min<Index>(s_ridge, std::min(a.rows(), a.cols())));

  const double ln_n = std::log2(std::max(2.0, static_cast<double>(n)));
  const double alpha = alpha_constant * eps * eps / (ln_n * ln_n * ln_n);
  const double nfac = p >= 2.0 ? std::pow(static_cast<double>(n), p / 2.0 - 1.0) : 1.0;

  std::vector<double> probs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    probs[static_cast<std::size_t>(i)] =
        std::min(1.0, nfac * std::pow(std::max(tau[i], 0.0), p / 2.0) / alpha);
  std::vector<std::uint32_t> picked = qsample(probs, ledger, RngStream(seed).derive("kp").next_u64());

  WeightedSubset out;
  out.source_n = n;
  out.axis = Axis::kRows;
  out.scheme = "kp_subspace";
  for (std::uint32_t idx : picked) {
    out.indices.push_back(idx);
    out.weights.push_back(1.0 / probs[idx]);
  }
  return out;
}

}  // namespace coresketch
