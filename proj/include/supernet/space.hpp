#pragma once

#include <string>
#include <vector>

#include "diffcore/errors.hpp"

namespace supernet {

// Three output scales at strides 8/16/32, indexed 0/1/2 throughout.
inline constexpr int kScales = 3;
inline constexpr int kStrides[kScales] = {8, 16, 32};

struct C3Spec {
    int channels = 0;  // block output channels
    int m = 0;         // bottleneck cells inside
    bool operator==(const C3Spec&) const = default;
};

// Structural description of one supernet: block widths and depths. The
// level presets follow the YOLOv5-lineage small/medium/large/extra tables;
// the -mini presets divide every width for desk-scale runs.
struct SearchSpaceSpec {
    std::string level = "custom";
    int channel_divisor = 1;
    int focus_channels = 0;
    std::vector<int> down_channels;   // one per down-sampling super-edge
    std::vector<C3Spec> backbone_c3;  // between/after the down-sample layers
    int spp_channels = 0;
    std::vector<int> fpn_channels;    // node base channels per scale (8/16/32)
    int fpn_c3_m = 0;                 // bottlenecks per FPN C3 block
    int n_classes = 3;                // detection head width = 5 + n_classes

    int l_d() const { return int(down_channels.size()); }
    int l_c() const { return int(backbone_c3.size()); }
    int l_b() const {
        int n = 0;
        for (const auto& c : backbone_c3) n += c.m;
        return n;
    }
    int k_b() const { return kScales * fpn_c3_m; }

    bool operator==(const SearchSpaceSpec&) const = default;

    // Throws ConfigError when any candidate expansion rate would produce a
    // fractional channel count, or the block layout is malformed.
    void validate() const;

    static SearchSpaceSpec preset(const std::string& level, int n_classes = 3);
    static bool is_known_level(const std::string& level);
};

}  // namespace supernet
