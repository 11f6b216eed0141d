#pragma once

#include <string>
#include <vector>

namespace carnotkit {

/// Outcome of a structural check: pass iff the witness list is empty.
struct Violation {
  std::string where;    // machine-readable locant, e.g. "bracket(1,2)"
  std::string message;  // human-readable description
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool pass() const { return violations.empty(); }
  void add(std::string where, std::string message) {
    violations.push_back({std::move(where), std::move(message)});
  }
  void merge(const ValidationReport& o) {
    violations.insert(violations.end(), o.violations.begin(), o.violations.end());
  }
};

}  // namespace carnotkit
