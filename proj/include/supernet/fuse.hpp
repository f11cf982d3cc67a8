#pragma once

#include <vector>

#include "diffcore/conv.hpp"
#include "diffcore/ops.hpp"
#include "kernelreuse/unified_kernel.hpp"

namespace supernet {

// Active state of one incoming edge: how many output channels its sampled
// expansion keeps, and (during search) the straight-through gate whose
// forward value is exactly 1.
template <typename T>
struct EdgeExpansion {
    int channels = 0;
    diffcore::Tensor<T> gate;  // undefined -> no gating
};

// Fused feature of one node: z = sum_i softmax(alpha_edge)_i * edge_i(x_i),
// where edge_i is the compounded convolution of predecessor i under
// softmax(alpha_ops_i), output-sliced to its sampled expansion. Inputs must
// already be spatially aligned to the node's scale; every edge runs at the
// given stride (1 for the aligned contract).
template <typename T>
diffcore::Tensor<T> fuse_node(const std::vector<diffcore::Tensor<T>>& preds,
                              const diffcore::Tensor<T>& alpha_edge,
                              const std::vector<diffcore::Tensor<T>>& alpha_ops,
                              const std::vector<kernelreuse::UnifiedKernel<T>>& kernels,
                              const std::vector<EdgeExpansion<T>>& expansions,
                              int stride = 1) {
    using namespace diffcore;
    const std::size_t n = preds.size();
    if (n == 0) throw InputError("fuse_node: no predecessors");
    if (std::size_t(alpha_edge.numel()) != n || alpha_ops.size() != n || kernels.size() != n ||
        expansions.size() != n)
        throw InputError("fuse_node: per-predecessor argument lengths disagree");
    for (const auto& p : preds)
        if (p.shape().h != preds[0].shape().h || p.shape().w != preds[0].shape().w)
            throw InputError("fuse_node: predecessors are not spatially aligned");

    Tensor<T> edge_w = softmax_channels(alpha_edge);
    Tensor<T> z;
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor<T>& x = preds[i];
        const auto& uk = kernels[i];
        if (x.shape().c > uk.c_in())
            throw InputError("fuse_node: predecessor channels exceed the edge's bank");
        Tensor<T> theta = uk.theta;
        if (x.shape().c < uk.c_in()) theta = slice_dim1_range(theta, 0, x.shape().c);
        const int c_act = expansions[i].channels;
        if (c_act < 1 || c_act > uk.c_out())
            throw InputError("fuse_node: bad active channel count");
        if (c_act < uk.c_out()) theta = slice_dim0_prefix(theta, c_act);
        Tensor<T> bias = uk.bias;
        if (bias.defined() && c_act < uk.c_out()) bias = slice_dim1_range(bias, 0, c_act);

        Tensor<T> kern = kernelreuse::compound_kernel(theta, uk.masks, softmax_channels(alpha_ops[i]));
        Tensor<T> y = conv2d(x, kern, bias, stride, kernelreuse::kBankSize / 2, 1);
        if (expansions[i].gate.defined()) y = scale_by(y, expansions[i].gate);
        y = scale_by(y, select_component(edge_w, int(i)));
        z = z.defined() ? add_widen(z, y) : y;
    }
    return z;
}

}  // namespace supernet
