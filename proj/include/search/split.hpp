#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace search {

// Disjoint, exhaustive, seeded-shuffle split of [0, n). The first part
// (weight training) gets round(ratio * n) elements. Splits where either
// side would be empty are rejected.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t n,
                                                                            double ratio,
                                                                            std::uint64_t seed);

}  // namespace search
