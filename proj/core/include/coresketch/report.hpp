#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coresketch/ledger.hpp"
#include "coresketch/linalg.hpp"

namespace coresketch {

// Frozen v1 report: one JSON object with exactly these keys, byte-identical
// across reruns with the same flags and seed.
struct RunReport {
  std::string task;
  Index n = 0;
  Index d = 0;
  Index k = 0;
  double p = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  Index coreset_size = 0;
  double cost_ratio = 0.0;
  QueryLedger ledger;
  std::uint64_t wall_time_ms = 0;
  std::vector<std::string> deviations;

  std::string to_json() const;
  void write(const std::string& path_or_dash) const;  // "-" = stdout
};

}  // namespace coresketch
