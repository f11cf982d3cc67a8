#include "supernet/materialize.hpp"

#include <cmath>

#include "chansearch/slicing.hpp"
#include "diffcore/conv.hpp"
#include "diffcore/ops.hpp"

namespace supernet {

using namespace diffcore;
using chansearch::expansion_from_value;
using kernelreuse::CandidateOp;

namespace {

// Native-shape candidate kernel at the chosen channel slices, copied out of
// the shared bank as a fresh trainable leaf.
TF extract_sliced(const UKf& uk, const CandidateOp& op, int c_out, int c_in) {
    const Shape& st = uk.theta.shape();
    if (c_out > st.n || c_in > st.c)
        throw InputError("materialize: slice exceeds the stored bank");
    const int k = op.kernel;
    const int start = kernelreuse::kBankSize / 2 - op.dilation * (k - 1) / 2;
    std::vector<float> out(std::size_t(c_out) * c_in * k * k);
    for (int co = 0; co < c_out; ++co)
        for (int ci = 0; ci < c_in; ++ci) {
            const float* src =
                uk.theta.values().data() + (std::int64_t(co) * st.c + ci) * 25;
            float* dst = out.data() + (std::int64_t(co) * c_in + ci) * k * k;
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c)
                    dst[r * k + c] =
                        src[(start + r * op.dilation) * 5 + (start + c * op.dilation)];
        }
    return TF::from({c_out, c_in, k, k}, std::move(out), true);
}

TF slice_plain_w(const TF& w, int c_out, int c_in) {
    const Shape& s = w.shape();
    if (c_out > s.n || c_in > s.c) throw InputError("materialize: slice exceeds the weight");
    std::vector<float> out(std::size_t(c_out) * c_in * s.h * s.w);
    for (int co = 0; co < c_out; ++co)
        for (int ci = 0; ci < c_in; ++ci)
            for (int i = 0; i < s.h * s.w; ++i)
                out[std::size_t((std::int64_t(co) * c_in + ci) * s.h * s.w + i)] =
                    w.values()[std::size_t((std::int64_t(co) * s.c + ci) * s.h * s.w + i)];
    return TF::from({c_out, c_in, s.h, s.w}, std::move(out), true);
}

TF slice_bias(const TF& b, int c) {
    std::vector<float> out(b.values().begin(), b.values().begin() + c);
    return TF::from({1, c, 1, 1}, std::move(out), true);
}

PlainConv copy_conv(const TF& w, const TF& b, int stride, int padding, int dilation, bool act) {
    PlainConv pc;
    pc.w = TF::from(w.shape(), w.values(), true);
    pc.b = TF::from(b.shape(), b.values(), true);
    pc.stride = stride;
    pc.padding = padding;
    pc.dilation = dilation;
    pc.act = act;
    return pc;
}

struct C3Out {
    DerivedC3 block;
    int out_channels;
};

C3Out materialize_c3(const C3Gene& gene, const C3Block& blk, int in_channels) {
    C3Out out;
    const int h = expansion_from_value(gene.expansion).apply(blk.base_h);
    out.block.cv1 = {slice_plain_w(blk.w1, h, in_channels), slice_bias(blk.b1, h), 1, 0, 1, true};
    out.block.cv2 = {slice_plain_w(blk.w2, h, in_channels), slice_bias(blk.b2, h), 1, 0, 1, true};
    int branch = h;
    for (std::size_t j = 0; j < blk.cells.size(); ++j) {
        const BottleneckGene& bg = gene.cells[j];
        const BottleneckCell& cell = blk.cells[j];
        DerivedBottleneck db;
        const int c1 = expansion_from_value(bg.expansion1).apply(cell.base_h);
        db.c1 = {slice_plain_w(cell.w1, c1, branch), slice_bias(cell.b1, c1), 1, 0, 1, true};
        const int c2 = expansion_from_value(bg.expansion2).apply(cell.base_h);
        const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(bg.op));
        db.c2 = {extract_sliced(cell.conv2.uk, op, c2, c1), slice_bias(cell.conv2.uk.bias, c2),
                 1, op.padding, op.dilation, true};
        branch = c2;
        out.block.cells.push_back(std::move(db));
    }
    // merge conv over concat(branch, bypass): stitch the two active input
    // blocks of the stored weight back together
    std::vector<float> w3(std::size_t(blk.base_c) * (branch + h));
    for (int co = 0; co < blk.base_c; ++co) {
        const float* src = blk.w3.values().data() + std::int64_t(co) * 2 * blk.base_h;
        float* dst = w3.data() + std::int64_t(co) * (branch + h);
        for (int i = 0; i < branch; ++i) dst[i] = src[i];
        for (int i = 0; i < h; ++i) dst[branch + i] = src[blk.base_h + i];
    }
    out.block.cv3 = {TF::from({blk.base_c, branch + h, 1, 1}, std::move(w3), true),
                     TF::from(blk.b3.shape(), blk.b3.values(), true), 1, 0, 1, true};
    out.out_channels = blk.base_c;
    return out;
}

struct FusionOut {
    DerivedFusion block;
    std::array<int, kScales> out_channels;
};

FusionOut materialize_fusion(const FusionGene& gene, const FusionBlock& fb,
                             const std::array<int, kScales>& input_widths) {
    FusionOut out;
    std::vector<int> entity_width(input_widths.begin(), input_widths.end());
    for (std::size_t j = 0; j < fb.nodes.size(); ++j) {
        const FusionNode& node = fb.nodes[j];
        const NodeGene& ng = gene.nodes[j];
        DerivedNode dn;
        dn.scale = node.scale;
        int width = 0;
        for (std::size_t k = 0; k < 2; ++k) {
            const EdgeGene& eg = ng.edges[k];
            const FusionEdge& fe = node.edges[std::size_t(eg.pred)];
            DerivedEdge de;
            de.pred = eg.pred;
            de.upsamples = fe.src_scale > fe.dst_scale ? fe.src_scale - fe.dst_scale : 0;
            const int stride = fe.dst_scale > fe.src_scale ? 1 << (fe.dst_scale - fe.src_scale) : 1;
            const int c_out = expansion_from_value(eg.expansion).apply(fe.base_out);
            const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(eg.op));
            de.conv = {extract_sliced(fe.uk, op, c_out, entity_width[std::size_t(eg.pred)]),
                       slice_bias(fe.uk.bias, c_out), stride, op.padding, op.dilation, false};
            width = std::max(width, c_out);
            dn.edges[k] = std::move(de);
        }
        C3Out c3 = materialize_c3(ng.c3, fb.c3s[std::size_t(node.scale)], width);
        dn.c3 = std::move(c3.block);
        out.out_channels[std::size_t(node.scale)] = c3.out_channels;
        entity_width.push_back(width);
        out.block.nodes.push_back(std::move(dn));
    }
    return out;
}

TF run_conv(const PlainConv& pc, const TF& x) {
    TF y = conv2d(x, pc.w, pc.b, pc.stride, pc.padding, pc.dilation);
    return pc.act ? silu(y) : y;
}

TF run_c3(const DerivedC3& c3, const TF& x) {
    TF chain = run_conv(c3.cv1, x);
    TF bypass = run_conv(c3.cv2, x);
    for (const auto& cell : c3.cells) {
        chain = run_conv(cell.c1, chain);
        chain = run_conv(cell.c2, chain);
    }
    return run_conv(c3.cv3, concat_channels<float>({chain, bypass}));
}

std::array<TF, kScales> run_fusion(const DerivedFusion& fb, const std::array<TF, kScales>& inputs) {
    std::vector<TF> entities(inputs.begin(), inputs.end());
    std::array<TF, kScales> out;
    for (const DerivedNode& node : fb.nodes) {
        TF z;
        for (const DerivedEdge& e : node.edges) {
            TF x = entities[std::size_t(e.pred)];
            for (int u = 0; u < e.upsamples; ++u) x = upsample_nearest2x(x);
            TF y = scale(run_conv(e.conv, x), 0.5f);
            z = z.defined() ? add_widen(z, y) : y;
        }
        entities.push_back(z);
        out[std::size_t(node.scale)] = run_c3(node.c3, z);
    }
    return out;
}

}  // namespace

DerivedNet materialize(const Genotype& genotype, const SuperNet& net) {
    genotype.validate();
    if (!(genotype.echo == net.spec))
        throw InputError("materialize: genotype was derived from a different space");
    DerivedNet d;
    d.spec = net.spec;
    d.genotype = genotype;
    d.stem = copy_conv(net.stem.w, net.stem.b, 1, 1, 1, true);

    int prev = net.spec.focus_channels;
    for (std::size_t i = 0; i < net.downs.size(); ++i) {
        const DownsampleGene& dg = genotype.downs[i];
        const SuperEdge& se = net.downs[i];
        const CandidateOp op = kernelreuse::candidate(kernelreuse::op_from_name(dg.op));
        const int c_out = expansion_from_value(dg.expansion).apply(se.base_out);
        d.downs.push_back({extract_sliced(se.uk, op, c_out, prev), slice_bias(se.uk.bias, c_out),
                           2, op.padding, op.dilation, true});
        prev = c_out;
        if (i < net.backbone.size()) {
            C3Out c3 = materialize_c3(genotype.backbone[i], net.backbone[i], prev);
            d.backbone.push_back(std::move(c3.block));
            prev = c3.out_channels;
        }
    }
    d.spp.cv1 = {slice_plain_w(net.spp.cv1.w, net.spp.cv1.w.shape().n, prev),
                 TF::from(net.spp.cv1.b.shape(), net.spp.cv1.b.values(), true), 1, 0, 1, true};
    d.spp.cv2 = copy_conv(net.spp.cv2.w, net.spp.cv2.b, 1, 0, 1, true);
    d.spp.pools = net.spp.pools;

    const std::array<int, kScales> td_in{net.backbone[1].base_c, net.backbone[2].base_c,
                                         net.spp.base_c};
    FusionOut td = materialize_fusion(genotype.topdown, net.topdown, td_in);
    d.topdown = std::move(td.block);
    FusionOut bu = materialize_fusion(genotype.bottomup, net.bottomup, td.out_channels);
    d.bottomup = std::move(bu.block);

    for (int s = 0; s < kScales; ++s)
        d.heads[std::size_t(s)] = copy_conv(net.heads[std::size_t(s)].w,
                                            net.heads[std::size_t(s)].b, 1, 0, 1, false);
    return d;
}

DerivedOut derived_forward(const DerivedNet& net, const TF& image) {
    if (image.shape().h % 32 != 0 || image.shape().w % 32 != 0)
        throw InputError("derived_forward: image spatial dims must be multiples of 32");
    TF x = run_conv(net.stem, space_to_depth2(image));
    std::array<TF, kScales> taps;
    for (std::size_t i = 0; i < net.downs.size(); ++i) {
        x = run_conv(net.downs[i], x);
        if (i < net.backbone.size()) {
            x = run_c3(net.backbone[i], x);
            if (i >= 1) taps[i - 1] = x;
        }
    }
    TF a = run_conv(net.spp.cv1, x);
    std::vector<TF> branches{a};
    for (int k : net.spp.pools) branches.push_back(maxpool2d(a, k, 1, k / 2));
    taps[2] = run_conv(net.spp.cv2, concat_channels(branches));

    std::array<TF, kScales> td = run_fusion(net.topdown, taps);
    DerivedOut out;
    out.features = run_fusion(net.bottomup, td);
    for (int s = 0; s < kScales; ++s)
        out.preds[std::size_t(s)] = conv2d(out.features[std::size_t(s)],
                                           net.heads[std::size_t(s)].w,
                                           net.heads[std::size_t(s)].b, 1, 0);
    return out;
}

std::vector<TF> DerivedNet::weight_tensors() const {
    std::vector<TF> out;
    auto push = [&](const PlainConv& pc) {
        out.push_back(pc.w);
        out.push_back(pc.b);
    };
    auto push_c3 = [&](const DerivedC3& c3) {
        push(c3.cv1);
        push(c3.cv2);
        for (const auto& cell : c3.cells) {
            push(cell.c1);
            push(cell.c2);
        }
        push(c3.cv3);
    };
    push(stem);
    for (const auto& c : downs) push(c);
    for (const auto& c : backbone) push_c3(c);
    push(spp.cv1);
    push(spp.cv2);
    for (const DerivedFusion* fb : {&topdown, &bottomup})
        for (const auto& node : fb->nodes) {
            for (const auto& e : node.edges) push(e.conv);
            push_c3(node.c3);
        }
    for (const auto& h : heads) push(h);
    return out;
}

std::int64_t DerivedNet::param_count() const {
    std::int64_t n = 0;
    for (const auto& t : weight_tensors()) n += t.numel();
    return n;
}

}  // namespace supernet
