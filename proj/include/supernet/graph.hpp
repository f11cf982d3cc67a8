#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chansearch/slicing.hpp"
#include "diffcore/rng.hpp"
#include "kernelreuse/unified_kernel.hpp"
#include "supernet/arch_params.hpp"
#include "supernet/genotype.hpp"
#include "supernet/space.hpp"

namespace supernet {

using TF = diffcore::Tensor<float>;
using UKf = kernelreuse::UnifiedKernel<float>;

// Computation order of the fusion-block nodes: top-down runs coarse to
// fine, bottom-up fine to coarse. Node j sees the three block inputs plus
// every earlier node as predecessors.
inline int topdown_node_scale(int j) { return kScales - 1 - j; }
inline int bottomup_node_scale(int j) { return j; }

struct ConvBlock {
    TF w, b;
};

// A searched convolution: shared 5x5 bank, op weights, expansion weights.
struct SuperEdge {
    UKf uk;
    int a_op = -1, a_exp = -1;
    std::vector<chansearch::ExpansionRate> exp_rates;
    int base_out = 0;
    int stride = 1;
};

struct BottleneckCell {
    TF w1, b1;  // 1x1, expansion-searched out
    int a_e1 = -1;
    SuperEdge conv2;  // 3 candidates, expansion-searched
    int base_h = 0;
};

// Split-transform-merge block: two 1x1 convs sharing one width choice, a
// bottleneck chain on the first branch, and a merge conv that runs in the
// concat-to-sum form so both branch widths stay prefix-sliceable.
struct C3Block {
    TF w1, b1, w2, b2, w3, b3;
    int a_exp = -1;
    std::vector<BottleneckCell> cells;
    int base_c = 0;  // fixed output channels
    int base_h = 0;  // base_c / 2
};

struct SppBlock {
    ConvBlock cv1, cv2;
    std::array<int, 3> pools{5, 9, 13};
    int base_c = 0;
};

struct FusionEdge {
    UKf uk;
    int a_op = -1, a_exp = -1;
    int pred = 0;
    int src_scale = 0, dst_scale = 0;
    int base_out = 0;
};

struct FusionNode {
    std::vector<FusionEdge> edges;  // one per predecessor
    int a_edge = -1;
    int scale = 0;
    int base_c = 0;
};

struct FusionBlock {
    std::vector<FusionNode> nodes;  // computation order
    std::vector<C3Block> c3s;       // indexed by scale
};

struct SuperNet {
    SearchSpaceSpec spec;
    ConvBlock stem;
    std::vector<SuperEdge> downs;
    std::vector<C3Block> backbone;
    SppBlock spp;
    FusionBlock topdown, bottomup;
    std::array<ConvBlock, kScales> heads;

    std::vector<TF> weight_tensors() const;
    std::int64_t weight_param_count() const;
};

struct BuildResult {
    SuperNet net;
    ArchParams params;
};

// Weights from seeded Kaiming fan-in init, architecture parameters all
// zero (uniform softmax). Same seed, same bytes.
BuildResult build_supernet(const SearchSpaceSpec& spec, std::uint64_t seed);

enum class ForwardMode { Search, Deterministic };

struct LayerTrace {
    std::string name;
    int base = 0;
    int channels = 0;
    double rate = 1.0;
};

struct ForwardResult {
    std::array<TF, kScales> features;  // fused multi-scale features, strides 8/16/32
    std::array<TF, kScales> preds;     // detection head outputs per scale
    std::vector<LayerTrace> trace;     // active expansion per searched layer
};

// Search mode Gumbel-samples one expansion per layer (straight-through
// gradients); deterministic mode takes argmax expansions and draws nothing.
// Operation and edge weights stay softmax-mixed in both.
ForwardResult forward(const SuperNet& net, const ArchParams& params, const TF& image,
                      diffcore::Rng& rng, ForwardMode mode, double tau = 1.0);

// Exact-coefficient forward at a genotype's choices: chosen op weight
// exactly 1, each kept edge weighted exactly 1/2, expansions from the
// genotype, no sampling. This is the reference the materialized network
// must reproduce.
ForwardResult forward_forced(const SuperNet& net, const Genotype& geno, const TF& image);

}  // namespace supernet
