#pragma once

#include <cstdint>
#include <string>

#include "search/loop.hpp"
#include "supernet/space.hpp"

namespace cli {

struct DatasetConfig {
    int n = 200;
    int image_size = 64;
    int n_classes = 3;
    int objects_min = 1;
    int objects_max = 3;
    double object_min_size = 0.15;  // box side as a fraction of the image
    double object_max_size = 0.40;
    std::uint64_t seed = 7;
    std::string dir;  // when set, load this dataset instead of generating

    void validate() const;
};

struct RunConfig {
    std::string level = "s-mini";
    supernet::SearchSpaceSpec space;  // resolved from level or explicit "space"
    search::BilevelConfig bilevel;
    DatasetConfig dataset;
    std::string out_dir = "runs";
    std::string run_name;  // optional; auto-timestamped when empty

    void validate() const;
};

RunConfig default_run_config();

// Strict parse: unknown fields are rejected with the offending field named;
// missing fields fall back to defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::string run_config_to_json(const RunConfig& cfg);

}  // namespace cli
