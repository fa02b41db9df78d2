#include "coresketch/ledger.hpp"

#include <cmath>

namespace coresketch {

void QueryLedger::charge_sample_budget(std::uint64_t n, double sum_p) {
  if (n == 0 || sum_p <= 0.0) return;
  double nd = static_cast<double>(n);
  double q = budget_constant * std::sqrt(nd * sum_p) * (1.0 + std::log2(nd));
  simulated_quantum_queries += static_cast<std::uint64_t>(std::ceil(q));
}

void QueryLedger::charge_sum_budget(std::uint64_t n, double eps, double delta) {
  if (n == 0) return;
  double q = budget_constant * std::sqrt(static_cast<double>(n)) * std::log(1.0 / delta) / eps;
  simulated_quantum_queries += static_cast<std::uint64_t>(std::ceil(q));
}

void QueryLedger::charge_count_budget(std::uint64_t n, std::uint64_t m, double eps,
                                      double delta) {
  if (n == 0 || m == 0) return;
  double q = budget_constant *
             std::sqrt(static_cast<double>(n) * static_cast<double>(m) / eps) *
             std::log(1.0 / delta);
  simulated_quantum_queries += static_cast<std::uint64_t>(std::ceil(q));
}

}  // namespace coresketch
