#include "supernet/space.hpp"

#include <algorithm>

namespace supernet {

namespace {

SearchSpaceSpec base_preset(const std::string& level) {
    SearchSpaceSpec s;
    s.level = level;
    if (level == "s") {
        s.focus_channels = 32;
        s.down_channels = {64, 128, 256, 512};
        s.backbone_c3 = {{64, 1}, {128, 3}, {256, 3}};
        s.spp_channels = 512;
        s.fpn_channels = {128, 256, 512};
        s.fpn_c3_m = 1;
    } else if (level == "m") {
        s.focus_channels = 48;
        s.down_channels = {96, 192, 384, 768};
        s.backbone_c3 = {{96, 2}, {192, 6}, {384, 6}};
        s.spp_channels = 768;
        s.fpn_channels = {192, 384, 768};
        s.fpn_c3_m = 2;
    } else if (level == "l") {
        s.focus_channels = 64;
        s.down_channels = {128, 256, 512, 1024};
        s.backbone_c3 = {{128, 3}, {256, 9}, {512, 9}};
        s.spp_channels = 1024;
        s.fpn_channels = {256, 512, 1024};
        s.fpn_c3_m = 3;
    } else if (level == "x") {
        s.focus_channels = 80;
        s.down_channels = {160, 320, 640, 1280};
        s.backbone_c3 = {{160, 4}, {320, 12}, {640, 12}};
        s.spp_channels = 1280;
        s.fpn_channels = {320, 640, 1280};
        s.fpn_c3_m = 4;
    } else {
        throw diffcore::ConfigError("unknown supernet level '" + level + "'");
    }
    return s;
}

void divide_channels(SearchSpaceSpec& s, int divisor) {
    s.channel_divisor = divisor;
    s.focus_channels /= divisor;
    for (int& c : s.down_channels) c /= divisor;
    for (auto& c3 : s.backbone_c3) c3.channels /= divisor;
    s.spp_channels /= divisor;
    for (int& c : s.fpn_channels) c /= divisor;
}

}  // namespace

bool SearchSpaceSpec::is_known_level(const std::string& level) {
    return level == "s" || level == "m" || level == "l" || level == "x" ||
           level == "s-mini" || level == "m-mini";
}

SearchSpaceSpec SearchSpaceSpec::preset(const std::string& level, int n_classes) {
    SearchSpaceSpec s;
    if (level == "s-mini") {
        s = base_preset("s");
        divide_channels(s, 8);
    } else if (level == "m-mini") {
        s = base_preset("m");
        divide_channels(s, 4);
    } else {
        s = base_preset(level);
    }
    s.level = level;
    s.n_classes = n_classes;
    s.validate();
    return s;
}

void SearchSpaceSpec::validate() const {
    auto bad = [](const std::string& what) { throw diffcore::ConfigError("search space: " + what); };
    if (n_classes < 1) bad("n_classes must be >= 1");
    if (focus_channels < 1) bad("focus_channels must be >= 1");
    if (down_channels.empty() || backbone_c3.empty()) bad("empty block lists");
    if (down_channels.size() != backbone_c3.size() + 1)
        bad("need one more down-sample layer than backbone C3 blocks");
    if (fpn_channels.size() != std::size_t(kScales)) bad("fpn_channels needs one entry per scale");
    if (fpn_c3_m < 1) bad("fpn_c3_m must be >= 1");
    if (spp_channels != down_channels.back())
        bad("spp_channels must match the last down-sample layer");

    // Expansion candidates are quarters; every e*C must be integral.
    for (int c : down_channels)
        if (c < 4 || c % 4 != 0) bad("down-sample channels must be positive multiples of 4");
    for (const auto& c3 : backbone_c3) {
        if (c3.m < 1) bad("c3 bottleneck count must be >= 1");
        // hidden width C/2 also takes expansions in quarters
        if (c3.channels < 8 || c3.channels % 8 != 0)
            bad("c3 channels must be positive multiples of 8");
    }
    if (spp_channels % 2 != 0) bad("spp channels must be even");
    for (int c : fpn_channels)
        if (c < 8 || c % 8 != 0) bad("fpn node channels must be positive multiples of 8");
}

}  // namespace supernet
