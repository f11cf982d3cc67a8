#pragma once

#include <string>

#include "cli/run_config.hpp"
#include "supernet/arch_params.hpp"

namespace cli {

// Architecture-parameter checkpoint: spec echo plus every named alpha
// vector. cmd_search writes one next to the genotype; cmd_derive consumes
// it standalone.
std::string arch_params_to_json(const supernet::ArchParams& params,
                                const supernet::SearchSpaceSpec& spec);
struct LoadedParams {
    supernet::ArchParams params;
    supernet::SearchSpaceSpec spec;
};
LoadedParams arch_params_from_json(const std::string& text);

// Creates out_dir/<run_name> (or a unique timestamped name) and refuses to
// reuse an existing directory: runs never clobber evidence.
std::string make_run_dir(const std::string& out_dir, const std::string& run_name,
                         const std::string& kind);

int cmd_gen_data(const DatasetConfig& cfg, const std::string& out_dir);
int cmd_search(const RunConfig& cfg);
int cmd_derive(const std::string& alpha_path, const std::string& out_dir,
               const std::string& run_name);
int cmd_eval(const std::string& genotype_path, const RunConfig& cfg);
int cmd_count_space(const std::string& level);  // "all" for every full preset
int cmd_selfcheck();

}  // namespace cli
