#include "supernet/derive.hpp"

#include <algorithm>
#include <numeric>

#include "chansearch/slicing.hpp"
#include "diffcore/ops.hpp"
#include "kernelreuse/candidates.hpp"
#include "supernet/graph.hpp"

namespace supernet {

namespace {

using chansearch::ExpansionRate;
using kernelreuse::CandidateOp;

double pick_rate(const ArchParams& p, int idx, const std::vector<ExpansionRate>& rates) {
    return rates[std::size_t(diffcore::argmax(p.values(idx)))].value();
}

std::string pick_op(const ArchParams& p, int idx, const std::vector<CandidateOp>& cands) {
    return kernelreuse::op_name(cands[std::size_t(diffcore::argmax(p.values(idx)))].kind);
}

C3Gene derive_c3(const ArchParams& p, const C3Alphas& a) {
    C3Gene g;
    g.expansion = pick_rate(p, a.exp, chansearch::expansion_two());
    for (const auto& cell : a.cells) {
        BottleneckGene b;
        b.expansion1 = pick_rate(p, cell.e1, chansearch::expansion_three());
        b.expansion2 = pick_rate(p, cell.e2, chansearch::expansion_three());
        b.op = pick_op(p, cell.op, kernelreuse::bottleneck_candidates());
        g.cells.push_back(std::move(b));
    }
    return g;
}

// Two largest normalized edge weights; equal weights keep the lower
// predecessor index.
std::array<int, 2> top2_preds(const std::vector<double>& alpha) {
    std::vector<double> w = diffcore::softmax(alpha);
    std::vector<int> idx(w.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (w[std::size_t(a)] != w[std::size_t(b)]) return w[std::size_t(a)] > w[std::size_t(b)];
        return a < b;
    });
    std::array<int, 2> kept{idx[0], idx[1]};
    if (kept[0] > kept[1]) std::swap(kept[0], kept[1]);
    return kept;
}

FusionGene derive_fusion(const ArchParams& p, const FusionAlphas& a, bool topdown) {
    FusionGene g;
    for (std::size_t j = 0; j < a.nodes.size(); ++j) {
        const NodeAlphas& node = a.nodes[j];
        NodeGene ng;
        const int scale = topdown ? topdown_node_scale(int(j)) : bottomup_node_scale(int(j));
        ng.stride = kStrides[scale];
        std::array<int, 2> kept = top2_preds(p.values(node.edge));
        for (std::size_t k = 0; k < 2; ++k) {
            const EdgeAlphas& e = node.edges[std::size_t(kept[k])];
            ng.edges[k] = {kept[k], pick_op(p, e.op, kernelreuse::edge_candidates()),
                           pick_rate(p, e.exp, chansearch::expansion_three())};
        }
        ng.c3 = derive_c3(p, a.c3s[j]);
        g.nodes.push_back(std::move(ng));
    }
    return g;
}

}  // namespace

Genotype derive(const ArchParams& params, const SearchSpaceSpec& spec) {
    spec.validate();
    Genotype g;
    g.level = spec.level;
    g.echo = spec;
    for (std::size_t i = 0; i < params.ds_op.size(); ++i)
        g.downs.push_back({pick_op(params, params.ds_op[i], kernelreuse::edge_candidates()),
                           pick_rate(params, params.ds_exp[i], chansearch::expansion_three())});
    for (const auto& c3 : params.backbone) g.backbone.push_back(derive_c3(params, c3));
    g.topdown = derive_fusion(params, params.topdown, true);
    g.bottomup = derive_fusion(params, params.bottomup, false);
    g.validate();
    return g;
}

}  // namespace supernet
