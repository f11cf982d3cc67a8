#include "supernet/arch_params.hpp"

#include "diffcore/ops.hpp"

namespace supernet {

const char* alpha_family_name(AlphaFamily f) {
    switch (f) {
        case AlphaFamily::Ops: return "ops";
        case AlphaFamily::Edges: return "edges";
        case AlphaFamily::Expansion: return "expansion";
    }
    throw diffcore::ConfigError("alpha_family_name: bad family");
}

std::vector<double> ArchParams::values(int idx) const {
    const auto& v = vecs[std::size_t(idx)].t.values();
    return std::vector<double>(v.begin(), v.end());
}

std::vector<diffcore::Tensor<float>> ArchParams::tensors() const {
    std::vector<diffcore::Tensor<float>> out;
    out.reserve(vecs.size());
    for (const auto& v : vecs) out.push_back(v.t);
    return out;
}

double ArchParams::mean_entropy(AlphaFamily f) const {
    double total = 0.0;
    int count = 0;
    for (const auto& v : vecs) {
        if (v.family != f) continue;
        total += diffcore::entropy(diffcore::softmax(
            std::vector<double>(v.t.values().begin(), v.t.values().end())));
        count++;
    }
    return count == 0 ? 0.0 : total / count;
}

namespace {

struct Builder {
    ArchParams p;

    int add(std::string name, AlphaFamily fam, int k) {
        AlphaVec v;
        v.name = std::move(name);
        v.family = fam;
        v.t = diffcore::Tensor<float>::zeros({1, k, 1, 1}, true);
        p.vecs.push_back(std::move(v));
        return int(p.vecs.size()) - 1;
    }

    C3Alphas c3(const std::string& prefix, int m) {
        C3Alphas c;
        c.exp = add(prefix + ".exp", AlphaFamily::Expansion, 2);
        for (int j = 0; j < m; ++j) {
            BottleneckAlphas b;
            const std::string bp = prefix + ".b" + std::to_string(j);
            b.e1 = add(bp + ".e1", AlphaFamily::Expansion, 3);
            b.e2 = add(bp + ".e2", AlphaFamily::Expansion, 3);
            b.op = add(bp + ".op", AlphaFamily::Ops, 3);
            c.cells.push_back(b);
        }
        return c;
    }

    FusionAlphas fusion(const std::string& prefix, int m) {
        FusionAlphas f;
        for (int j = 0; j < kScales; ++j) {
            NodeAlphas node;
            const std::string np = prefix + ".n" + std::to_string(j);
            node.edge = add(np + ".edge", AlphaFamily::Edges, fusion_node_preds(j));
            for (int pr = 0; pr < fusion_node_preds(j); ++pr) {
                EdgeAlphas e;
                const std::string ep = np + ".p" + std::to_string(pr);
                e.op = add(ep + ".op", AlphaFamily::Ops, 4);
                e.exp = add(ep + ".exp", AlphaFamily::Expansion, 3);
                node.edges.push_back(e);
            }
            f.nodes.push_back(std::move(node));
        }
        for (int s = 0; s < kScales; ++s)
            f.c3s.push_back(c3(prefix + ".c3_" + std::to_string(s), m));
        return f;
    }
};

}  // namespace

ArchParams build_arch_params(const SearchSpaceSpec& spec) {
    spec.validate();
    Builder b;
    for (int i = 0; i < spec.l_d(); ++i) {
        const std::string dp = "bb.down" + std::to_string(i);
        b.p.ds_op.push_back(b.add(dp + ".op", AlphaFamily::Ops, 4));
        b.p.ds_exp.push_back(b.add(dp + ".exp", AlphaFamily::Expansion, 3));
    }
    for (int i = 0; i < spec.l_c(); ++i)
        b.p.backbone.push_back(b.c3("bb.c3_" + std::to_string(i), spec.backbone_c3[std::size_t(i)].m));
    b.p.topdown = b.fusion("fpn.td", spec.fpn_c3_m);
    b.p.bottomup = b.fusion("fpn.bu", spec.fpn_c3_m);
    return std::move(b.p);
}

}  // namespace supernet
