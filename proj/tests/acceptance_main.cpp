// Dedicated acceptance binary: runs every primary criterion and exits
// nonzero when any fails. The vpstab CLI exposes the same suite through
// `vpstab verify --suite primary`.

#include <iostream>

#include "vpstab/verify.hpp"

int main() {
    std::vector<vpstab::CriterionResult> results = vpstab::runAcceptanceSuite(std::cout);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    std::cout << (all ? "suite PASS" : "suite FAIL") << std::endl;
    return all ? 0 : 1;
}
