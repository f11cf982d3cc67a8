#pragma once

#include "supernet/arch_params.hpp"
#include "supernet/genotype.hpp"

namespace supernet {

// Discrete architecture from trained parameters: argmax per weight vector,
// top-2 predecessors per fusion node. Ties go to the lower index.
Genotype derive(const ArchParams& params, const SearchSpaceSpec& spec);

}  // namespace supernet
