#pragma once

#include <string>
#include <vector>

namespace atomtrans {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast self-contained invariant checks over the numerical kernels, suitable
/// for a pristine-checkout smoke test.
std::vector<CheckResult> run_invariant_suite();

}  // namespace atomtrans
