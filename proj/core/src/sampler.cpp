#include "coresketch/sampler.hpp"

#include <cmath>
#include <string>

#include "coresketch/errors.hpp"

namespace coresketch {

std::vector<std::uint32_t> qsample(const std::vector<double>& probs, QueryLedger& ledger,
                                   std::uint64_t seed) {
  const std::size_t n = probs.size();
  double sum_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw ContractError("qsample: probability outside [0,1] at index " + std::to_string(i));
    sum_p += p;
  }
  ledger.oracle_calls += n;
  ledger.charge_sample_budget(n, sum_p);

  RngStream rng = RngStream(seed).derive("qsample");
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.next_double() < probs[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::uint32_t> qsample(std::size_t n, const ProbOracle& prob, QueryLedger& ledger,
                                   std::uint64_t seed) {
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = prob(i);
  return qsample(probs, ledger, seed);
}

HalvingChain halving_chain(std::size_t n, std::size_t stop_size, std::uint64_t seed) {
  if (stop_size < 1 || stop_size > n) throw ContractError("halving_chain: stop_size out of range");
  std::vector<std::uint32_t> full(n);
  for (std::size_t i = 0; i < n; ++i) full[i] = static_cast<std::uint32_t>(i);

  const std::size_t depth = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(n) / static_cast<double>(stop_size))));
  HalvingChain chain;
  if (depth == 0) {
    chain.levels.push_back(std::move(full));
    return chain;
  }

  RngStream base = RngStream(seed).derive("halving_chain");
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    RngStream rng = base.derive(attempt);
    std::vector<std::vector<std::uint32_t>> levels(depth + 1);
    levels[depth] = full;
    for (std::size_t t = depth; t-- > 0;) {
      for (std::uint32_t idx : levels[t + 1])
        if (rng.next_double() < 0.5) levels[t].push_back(idx);
    }
    if (!levels[0].empty() && levels[0].size() <= 2 * stop_size) {
      chain.levels = std::move(levels);
      return chain;
    }
  }
  throw ConvergenceError("halving_chain: could not draw a bottom level within bounds", 0.0);
}

}  // namespace coresketch
