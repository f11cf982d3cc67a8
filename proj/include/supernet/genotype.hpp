#pragma once

#include <array>
#include <string>
#include <vector>

#include "supernet/space.hpp"

namespace supernet {

// Discrete architecture extracted from trained architecture parameters.
// Expansion rates are stored as their exact values (0.5/0.75/1.0).

struct BottleneckGene {
    std::string op;  // second conv: conv3x3 | conv5x5 | conv3x3_dilated2
    double expansion1 = 1.0;
    double expansion2 = 1.0;
    bool operator==(const BottleneckGene&) const = default;
};

struct C3Gene {
    double expansion = 1.0;  // hidden width of the two 1x1 convs
    std::vector<BottleneckGene> cells;
    bool operator==(const C3Gene&) const = default;
};

struct DownsampleGene {
    std::string op;
    double expansion = 1.0;
    bool operator==(const DownsampleGene&) const = default;
};

struct EdgeGene {
    int pred = -1;  // index into the fusion block's entity list
    std::string op;
    double expansion = 1.0;
    bool operator==(const EdgeGene&) const = default;
};

struct NodeGene {
    int stride = 0;                  // output stride of this node
    std::array<EdgeGene, 2> edges;   // kept predecessors, ordered by pred index
    C3Gene c3;
    bool operator==(const NodeGene&) const = default;
};

struct FusionGene {
    std::vector<NodeGene> nodes;  // computation order
    bool operator==(const FusionGene&) const = default;
};

struct Genotype {
    int version = 1;
    std::string level;
    std::vector<DownsampleGene> downs;
    std::vector<C3Gene> backbone;
    FusionGene topdown, bottomup;
    SearchSpaceSpec echo;  // the space this genotype was derived from
    bool operator==(const Genotype&) const = default;

    // Structural checks: exactly two distinct predecessors per node, known
    // candidate ops, expansions from the right candidate sets, counts
    // matching the echoed space.
    void validate() const;
};

std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);

// Spec echo shared with the arch-params checkpoint format.
std::string spec_to_json(const SearchSpaceSpec& spec);

}  // namespace supernet
