#pragma once

#include <string>
#include <vector>

namespace notif {

struct Check {
  std::string name;
  bool passed = false;
  double residual = 0.0;  // worst violation found, in the check's own units
  std::string detail;
};

struct CheckReport {
  std::vector<Check> checks;

  bool all_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  const Check* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  bool passed(const std::string& name) const {
    const Check* c = find(name);
    return c != nullptr && c->passed;
  }
};

}  // namespace notif
