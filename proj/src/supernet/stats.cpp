#include "supernet/stats.hpp"

#include <algorithm>

#include "chansearch/slicing.hpp"
#include "diffcore/errors.hpp"
#include "kernelreuse/candidates.hpp"
#include "supernet/graph.hpp"

namespace supernet {

using chansearch::expansion_from_value;
using kernelreuse::CandidateOp;

namespace {

struct Walk {
    CostReport report;

    void conv(const std::string& name, int c_in, int c_out, int k, std::int64_t out_h,
              std::int64_t out_w) {
        CostReport::Layer l;
        l.name = name;
        l.params = std::int64_t(c_out) * c_in * k * k + c_out;
        l.macs = std::int64_t(c_out) * c_in * k * k * out_h * out_w;
        report.params += l.params;
        report.macs += l.macs;
        report.layers.push_back(std::move(l));
    }
};

struct Hw {
    std::int64_t h, w;
    Hw half() const { return {h / 2, w / 2}; }
};

int c3_walk(Walk& walk, const std::string& name, const C3Gene& gene, int base_c, int in_ch,
            const Hw& hw) {
    const int base_h = base_c / 2;
    const int h = expansion_from_value(gene.expansion).apply(base_h);
    walk.conv(name + ".cv1", in_ch, h, 1, hw.h, hw.w);
    walk.conv(name + ".cv2", in_ch, h, 1, hw.h, hw.w);
    int branch = h;
    for (std::size_t j = 0; j < gene.cells.size(); ++j) {
        const BottleneckGene& b = gene.cells[j];
        const int c1 = expansion_from_value(b.expansion1).apply(base_h);
        const int c2 = expansion_from_value(b.expansion2).apply(base_h);
        const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(b.op));
        walk.conv(name + ".b" + std::to_string(j) + ".c1", branch, c1, 1, hw.h, hw.w);
        walk.conv(name + ".b" + std::to_string(j) + ".c2", c1, c2, op.kernel, hw.h, hw.w);
        branch = c2;
    }
    walk.conv(name + ".cv3", branch + h, base_c, 1, hw.h, hw.w);
    return base_c;
}

std::array<int, kScales> fusion_walk(Walk& walk, const std::string& name, const FusionGene& gene,
                                     const SearchSpaceSpec& spec,
                                     const std::array<int, kScales>& input_widths,
                                     const std::array<Hw, kScales>& scale_hw) {
    std::vector<int> entity_width(input_widths.begin(), input_widths.end());
    std::array<int, kScales> out{};
    for (std::size_t j = 0; j < gene.nodes.size(); ++j) {
        const NodeGene& node = gene.nodes[j];
        int scale = -1;
        for (int s = 0; s < kScales; ++s)
            if (kStrides[s] == node.stride) scale = s;
        if (scale < 0) throw diffcore::InputError("count_params_flops: bad node stride");
        const Hw hw = scale_hw[std::size_t(scale)];
        int width = 0;
        for (std::size_t k = 0; k < 2; ++k) {
            const EdgeGene& e = node.edges[k];
            const int c_out = expansion_from_value(e.expansion)
                                  .apply(spec.fpn_channels[std::size_t(scale)]);
            const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(e.op));
            walk.conv(name + ".n" + std::to_string(j) + ".p" + std::to_string(e.pred),
                      entity_width[std::size_t(e.pred)], c_out, op.kernel, hw.h, hw.w);
            width = std::max(width, c_out);
        }
        out[std::size_t(scale)] = c3_walk(walk, name + ".c3_" + std::to_string(scale), node.c3,
                                          spec.fpn_channels[std::size_t(scale)], width, hw);
        entity_width.push_back(width);
    }
    return out;
}

}  // namespace

CostReport count_params_flops(const Genotype& genotype, std::pair<int, int> input_hw) {
    genotype.validate();
    const SearchSpaceSpec& spec = genotype.echo;
    if (input_hw.first % 32 != 0 || input_hw.second % 32 != 0 || input_hw.first < 32 ||
        input_hw.second < 32)
        throw diffcore::InputError("count_params_flops: input dims must be multiples of 32");

    Walk walk;
    Hw hw{input_hw.first / 2, input_hw.second / 2};
    walk.conv("stem", 12, spec.focus_channels, 3, hw.h, hw.w);
    int prev = spec.focus_channels;
    std::array<Hw, kScales> scale_hw;
    for (std::size_t i = 0; i < genotype.downs.size(); ++i) {
        hw = hw.half();
        const DownsampleGene& d = genotype.downs[i];
        const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(d.op));
        const int c_out = expansion_from_value(d.expansion).apply(spec.down_channels[i]);
        walk.conv("down" + std::to_string(i), prev, c_out, op.kernel, hw.h, hw.w);
        prev = c_out;
        if (i < genotype.backbone.size())
            prev = c3_walk(walk, "bb.c3_" + std::to_string(i), genotype.backbone[i],
                           spec.backbone_c3[i].channels, prev, hw);
        if (i >= 1) scale_hw[std::size_t(i - 1)] = hw;
    }
    walk.conv("spp.cv1", prev, spec.spp_channels / 2, 1, hw.h, hw.w);
    walk.conv("spp.cv2", 2 * spec.spp_channels, spec.spp_channels, 1, hw.h, hw.w);

    const std::array<int, kScales> td_in{spec.backbone_c3[1].channels,
                                         spec.backbone_c3[2].channels, spec.spp_channels};
    std::array<int, kScales> td = fusion_walk(walk, "fpn.td", genotype.topdown, spec, td_in, scale_hw);
    std::array<int, kScales> bu = fusion_walk(walk, "fpn.bu", genotype.bottomup, spec, td, scale_hw);
    for (int s = 0; s < kScales; ++s)
        walk.conv("head" + std::to_string(s), bu[std::size_t(s)], 5 + spec.n_classes, 1,
                  scale_hw[std::size_t(s)].h, scale_hw[std::size_t(s)].w);
    return walk.report;
}

}  // namespace supernet
