#pragma once

#include <cstdint>

namespace coresketch {

// Accounting record for every pipeline. Classical work is counted as it
// happens; the quantum counter reports what a Grover-style sampler would have
// spent for the same draws, without executing one.
struct QueryLedger {
  std::uint64_t classical_entry_reads = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t kernel_evaluations = 0;
  std::uint64_t simulated_quantum_queries = 0;

  // Budget constant hidden inside the asymptotic bound; recorded so reports
  // can state which constant produced the numbers.
  double budget_constant = 4.0;

  // One independent-inclusion sampling pass over n items with probability
  // mass sum_p charges ceil(C_q * sqrt(n * sum_p) * (1 + log2 n)).
  void charge_sample_budget(std::uint64_t n, double sum_p);

  // Sum estimation over n items at accuracy eps, failure delta.
  void charge_sum_budget(std::uint64_t n, double eps, double delta);

  // Per-cluster count estimation over n items and m clusters.
  void charge_count_budget(std::uint64_t n, std::uint64_t m, double eps, double delta);

  QueryLedger& operator+=(const QueryLedger& other) {
    classical_entry_reads += other.classical_entry_reads;
    oracle_calls += other.oracle_calls;
    kernel_evaluations += other.kernel_evaluations;
    simulated_quantum_queries += other.simulated_quantum_queries;
    return *this;
  }
};

}  // namespace coresketch
