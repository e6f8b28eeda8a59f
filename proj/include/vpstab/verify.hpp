#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vpstab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs the primary acceptance criteria, printing one pass/fail line per
/// criterion. Returns the collected results; failures leave the process
/// state intact so callers decide the exit status.
std::vector<CriterionResult> runAcceptanceSuite(std::ostream& out);

} // namespace vpstab
