#pragma once

#include <string>
#include <vector>

#include "search/data.hpp"

namespace cli {

// On-disk dataset layout: one raw float32 little-endian blob (3*H*W) per
// sample plus manifest.json listing files and box records. Grid targets are
// rebuilt on load.
void save_dataset(const std::string& dir, const std::vector<search::Sample>& samples);
std::vector<search::Sample> load_dataset(const std::string& dir);

}  // namespace cli
