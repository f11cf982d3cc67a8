#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "supernet/genotype.hpp"

namespace supernet {

// Analytic cost of the materialized architecture. Convolutions count
// C_out*C_in*k^2 weights plus C_out bias; multiply-accumulates are the
// weight count (bias-free) times the output plane. Pools/upsamples are free.
struct CostReport {
    struct Layer {
        std::string name;
        std::int64_t params = 0;
        std::int64_t macs = 0;
    };
    std::int64_t params = 0;
    std::int64_t macs = 0;
    std::vector<Layer> layers;
};

CostReport count_params_flops(const Genotype& genotype, std::pair<int, int> input_hw);

}  // namespace supernet
