#pragma once

#include <string>
#include <vector>

#include "diffcore/tensor.hpp"
#include "supernet/space.hpp"

namespace supernet {

enum class AlphaFamily { Ops, Edges, Expansion };

const char* alpha_family_name(AlphaFamily f);

// One architecture-weight vector, stored on the channel axis so it can sit
// in the compute graph directly.
struct AlphaVec {
    std::string name;
    AlphaFamily family;
    diffcore::Tensor<float> t;  // (1, k, 1, 1), requires_grad
};

// Indices below refer into ArchParams::vecs.
struct BottleneckAlphas {
    int e1 = -1, e2 = -1, op = -1;
};

struct C3Alphas {
    int exp = -1;
    std::vector<BottleneckAlphas> cells;
};

struct EdgeAlphas {
    int op = -1, exp = -1;
};

struct NodeAlphas {
    int edge = -1;                 // weight vector over this node's predecessors
    std::vector<EdgeAlphas> edges; // one per predecessor, pred index = position
};

struct FusionAlphas {
    std::vector<NodeAlphas> nodes;  // computation order
    std::vector<C3Alphas> c3s;      // indexed by scale
};

// All architecture parameters of one supernet, zero-initialized (uniform
// softmax). The flat vector owns the tensors; the structured views mirror
// the supernet layout.
struct ArchParams {
    std::vector<AlphaVec> vecs;
    std::vector<int> ds_op, ds_exp;   // per down-sampling layer
    std::vector<C3Alphas> backbone;   // per backbone C3 block
    FusionAlphas topdown, bottomup;

    diffcore::Tensor<float>& tensor(int idx) { return vecs[std::size_t(idx)].t; }
    const diffcore::Tensor<float>& tensor(int idx) const { return vecs[std::size_t(idx)].t; }
    std::vector<double> values(int idx) const;

    std::vector<diffcore::Tensor<float>> tensors() const;
    // Mean softmax entropy of all vectors in one family, in nats.
    double mean_entropy(AlphaFamily f) const;
};

// Number of predecessors of computed fusion node j (block inputs first).
inline int fusion_node_preds(int j) { return kScales + j; }

ArchParams build_arch_params(const SearchSpaceSpec& spec);

}  // namespace supernet
