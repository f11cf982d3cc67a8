#pragma once

#include <string>
#include <vector>

namespace cli {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// The full invariant suite: compound-conv equivalence, concat-to-sum
// equivalence, Gumbel sampling statistics, straight-through contract,
// gradient checks, search-space counts, mask geometry, parameter-count
// ratio, slicing consistency, derivation tie-breaks, genotype round-trip.
std::vector<CheckResult> run_selfcheck();

}  // namespace cli
