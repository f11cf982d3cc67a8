#pragma once

#include <array>
#include <vector>

#include "supernet/graph.hpp"

namespace supernet {

// Standalone network extracted from a supernet at a genotype's choices:
// chosen candidate kernels in their native shapes, channel prefixes at the
// chosen expansions, only the two kept edges per fusion node. No
// architecture parameters remain; all weights are fresh trainable leaves.

struct PlainConv {
    TF w, b;
    int stride = 1, padding = 0, dilation = 1;
    bool act = true;
};

struct DerivedBottleneck {
    PlainConv c1, c2;
};

struct DerivedC3 {
    PlainConv cv1, cv2, cv3;  // cv3 consumes the concatenated branches
    std::vector<DerivedBottleneck> cells;
};

struct DerivedSpp {
    PlainConv cv1, cv2;
    std::array<int, 3> pools{5, 9, 13};
};

struct DerivedEdge {
    int pred = 0;
    int upsamples = 0;  // nearest-2x steps before the conv
    PlainConv conv;     // stride covers finer-to-coarser alignment
};

struct DerivedNode {
    int scale = 0;
    std::array<DerivedEdge, 2> edges;
    DerivedC3 c3;
};

struct DerivedFusion {
    std::vector<DerivedNode> nodes;  // computation order
};

struct DerivedNet {
    SearchSpaceSpec spec;
    Genotype genotype;
    PlainConv stem;
    std::vector<PlainConv> downs;
    std::vector<DerivedC3> backbone;
    DerivedSpp spp;
    DerivedFusion topdown, bottomup;
    std::array<PlainConv, kScales> heads;

    std::vector<TF> weight_tensors() const;
    std::int64_t param_count() const;
};

DerivedNet materialize(const Genotype& genotype, const SuperNet& net);

struct DerivedOut {
    std::array<TF, kScales> features;
    std::array<TF, kScales> preds;
};

DerivedOut derived_forward(const DerivedNet& net, const TF& image);

}  // namespace supernet
