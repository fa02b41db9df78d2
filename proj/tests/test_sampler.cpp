#include <cmath>

#include "coresketch/errors.hpp"
#include "coresketch/sampler.hpp"
#include "doctest.h"

using namespace coresketch;

TEST_CASE("qsample degenerate probabilities") {
  QueryLedger ledger;
  auto none = qsample(100, [](std::size_t) { return 0.0; }, ledger, 1);
  CHECK(none.empty());
  auto all = qsample(100, [](std::size_t) { return 1.0; }, ledger, 1);
  CHECK(all.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);

  CHECK_THROWS_AS(qsample(3, [](std::size_t) { return 1.5; }, ledger, 1), ContractError);
  CHECK_THROWS_AS(qsample(3, [](std::size_t) { return -0.1; }, ledger, 1), ContractError);
}

TEST_CASE("qsample concentration at p = 1/2") {
  QueryLedger ledger;
  auto out = qsample(10000, [](std::size_t) { return 0.5; }, ledger, 7);
  CHECK(out.size() >= 4500);
  CHECK(out.size() <= 5500);
}

TEST_CASE("qsample ledger arithmetic is exact") {
  QueryLedger ledger;
  const std::size_t n = 1024;
  const double p = 0.25;
  qsample(n, [&](std::size_t) { return p; }, ledger, 3);
  CHECK(ledger.oracle_calls == n);
  const double sum_p = p * static_cast<double>(n);
  const double expect =
      std::ceil(ledger.budget_constant * std::sqrt(static_cast<double>(n) * sum_p) *
                (1.0 + std::log2(static_cast<double>(n))));
  CHECK(ledger.simulated_quantum_queries == static_cast<std::uint64_t>(expect));
}

TEST_CASE("qsample determinism") {
  QueryLedger l1, l2;
  auto a = qsample(500, [](std::size_t i) { return (i % 7) / 10.0; }, l1, 99);
  auto b = qsample(500, [](std::size_t i) { return (i % 7) / 10.0; }, l2, 99);
  CHECK(a == b);
  CHECK(l1.oracle_calls == l2.oracle_calls);
  CHECK(l1.simulated_quantum_queries == l2.simulated_quantum_queries);
}

TEST_CASE("qsample empirical inclusion frequency") {
  const double q = 0.3;
  int hits = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    QueryLedger ledger;
    auto out = qsample(5, [&](std::size_t) { return q; }, ledger,
                       static_cast<std::uint64_t>(t) + 1000);
    for (auto idx : out)
      if (idx == 2) ++hits;
  }
  const double freq = static_cast<double>(hits) / trials;
  CHECK(std::abs(freq - q) <= 0.02);
}

TEST_CASE("halving_chain structure") {
  HalvingChain trivial = halving_chain(64, 64, 5);
  CHECK(trivial.depth() == 1);
  CHECK(trivial.levels[0].size() == 64);

  HalvingChain chain = halving_chain(1024, 64, 5);
  CHECK(chain.depth() == 5);  // T = 4 halvings plus the full level
  CHECK(chain.levels.back().size() == 1024);
  CHECK(chain.levels[0].size() <= 128);
  CHECK(!chain.levels[0].empty());

  // nesting: each level is a subset of the next
  for (std::size_t t = 0; t + 1 < chain.depth(); ++t) {
    std::size_t pos = 0;
    const auto& small = chain.levels[t];
    const auto& big = chain.levels[t + 1];
    for (std::uint32_t idx : small) {
      while (pos < big.size() && big[pos] != idx) ++pos;
      REQUIRE(pos < big.size());
      ++pos;
    }
  }

  CHECK_THROWS_AS(halving_chain(10, 20, 1), ContractError);
}
