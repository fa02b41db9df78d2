#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "coresketch/ledger.hpp"
#include "coresketch/rng.hpp"

namespace coresketch {

using ProbOracle = std::function<double(std::size_t)>;

// Nested uniform-halving index sets S_0 c S_1 c ... c S_T = [n].
struct HalvingChain {
  std::vector<std::vector<std::uint32_t>> levels;

  std::size_t depth() const { return levels.size(); }
};

// Include index i independently with probability prob(i). The probabilities
// are all evaluated classically (n oracle calls go on the ledger); the
// quantum counter is charged with the budget a Grover-based sampler would
// have used for the same draw, computed from the exact probability mass.
std::vector<std::uint32_t> qsample(std::size_t n, const ProbOracle& prob,
                                   QueryLedger& ledger, std::uint64_t seed);

// Variant that takes pre-evaluated probabilities (still charges n oracle
// calls; the evaluation happened to produce the vector).
std::vector<std::uint32_t> qsample(const std::vector<double>& probs, QueryLedger& ledger,
                                   std::uint64_t seed);

// Build a halving chain over [n] stopping once the expected level size drops
// to stop_size: T = ceil(log2(n / stop_size)) levels of independent 1/2
// inclusions. The bottom level is redrawn (bounded retries) if it is empty or
// larger than 2 * stop_size.
HalvingChain halving_chain(std::size_t n, std::size_t stop_size, std::uint64_t seed);

}  // namespace coresketch
