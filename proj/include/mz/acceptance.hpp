#pragma once

// End-to-end acceptance battery: every criterion is pinned in code with its
// tolerance and prints one pass/fail line.  `mzlab verify-all` and the ctest
// acceptance binary both run this.

#include <iosfwd>
#include <string>
#include <vector>

namespace mz::acceptance {

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<CriterionResult> run_all(std::ostream& log);

}  // namespace mz::acceptance
