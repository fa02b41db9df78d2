#include "coresketch/report.hpp"

#include <fstream>
#include <iostream>

#include "coresketch/errors.hpp"
#include "json.hpp"

namespace coresketch {

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "v1";
  j["task"] = task;
  j["n"] = n;
  j["d"] = d;
  j["k"] = k;
  j["p"] = p;
  j["eps"] = eps;
  j["delta"] = delta;
  j["seed"] = seed;
  j["coreset_size"] = coreset_size;
  j["cost_ratio"] = cost_ratio;
  j["ledger"] = {
      {"classical_entry_reads", ledger.classical_entry_reads},
      {"oracle_calls", ledger.oracle_calls},
      {"kernel_evaluations", ledger.kernel_evaluations},
      {"simulated_quantum_queries", ledger.simulated_quantum_queries},
      {"budget_constant", ledger.budget_constant},
  };
  j["wall_time_ms"] = wall_time_ms;
  j["deviations"] = deviations;
  return j.dump(2) + "\n";
}

void RunReport::write(const std::string& path_or_dash) const {
  const std::string text = to_json();
  if (path_or_dash == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path_or_dash);
  if (!out) throw ContractError("report: cannot open " + path_or_dash);
  out << text;
}

}  // namespace coresketch
