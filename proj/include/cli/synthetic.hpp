#pragma once

#include <vector>

#include "cli/run_config.hpp"
#include "search/data.hpp"

namespace cli {

// Seeded synthetic detection set: colored axis-aligned rectangles (class =
// color index) over a noise background, boxes fully inside the image, grid
// targets preassigned per scale.
std::vector<search::Sample> gen_synthetic_dataset(const DatasetConfig& cfg);

}  // namespace cli
