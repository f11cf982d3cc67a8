#include "supernet/graph.hpp"

#include <algorithm>
#include <cmath>

#include "chansearch/gumbel.hpp"
#include "diffcore/conv.hpp"
#include "diffcore/ops.hpp"

namespace supernet {

using namespace diffcore;
using chansearch::ExpansionRate;
using kernelreuse::CandidateOp;

namespace {

ConvBlock make_conv(int c_in, int c_out, int k, Rng& rng) {
    // gain 2 against silu's slope-1/2 small-signal regime (no normalization
    // layers in this engine); 3/4 effective input width under slicing
    const double std_dev = 2.0 / std::sqrt(double(c_in) * k * k * 0.75);
    std::vector<float> w(std::size_t(c_out) * c_in * k * k);
    for (float& v : w) v = float(rng.gaussian() * std_dev);
    ConvBlock cb;
    cb.w = TF::from({c_out, c_in, k, k}, std::move(w), true);
    cb.b = TF::zeros({1, c_out, 1, 1}, true);
    return cb;
}

SuperEdge make_super_edge(int c_in, int c_out, std::vector<CandidateOp> cands, int a_op,
                          int a_exp, int stride, Rng& rng) {
    SuperEdge e;
    e.uk = kernelreuse::make_unified_kernel<float>(c_out, c_in, std::move(cands), rng, true);
    e.a_op = a_op;
    e.a_exp = a_exp;
    e.exp_rates = chansearch::expansion_three();
    e.base_out = c_out;
    e.stride = stride;
    return e;
}

C3Block make_c3(int c_in, const C3Spec& cs, const C3Alphas& alphas, Rng& rng) {
    C3Block blk;
    blk.base_c = cs.channels;
    blk.base_h = cs.channels / 2;
    blk.a_exp = alphas.exp;
    ConvBlock cv1 = make_conv(c_in, blk.base_h, 1, rng);
    blk.w1 = cv1.w;
    blk.b1 = cv1.b;
    ConvBlock cv2 = make_conv(c_in, blk.base_h, 1, rng);
    blk.w2 = cv2.w;
    blk.b2 = cv2.b;
    ConvBlock cv3 = make_conv(2 * blk.base_h, blk.base_c, 1, rng);
    blk.w3 = cv3.w;
    blk.b3 = cv3.b;
    for (int j = 0; j < cs.m; ++j) {
        BottleneckCell cell;
        cell.base_h = blk.base_h;
        ConvBlock c1 = make_conv(blk.base_h, blk.base_h, 1, rng);
        cell.w1 = c1.w;
        cell.b1 = c1.b;
        cell.a_e1 = alphas.cells[std::size_t(j)].e1;
        cell.conv2 = make_super_edge(blk.base_h, blk.base_h, kernelreuse::bottleneck_candidates(),
                                     alphas.cells[std::size_t(j)].op,
                                     alphas.cells[std::size_t(j)].e2, 1, rng);
        blk.cells.push_back(std::move(cell));
    }
    return blk;
}

FusionBlock make_fusion(const SearchSpaceSpec& spec, const FusionAlphas& alphas,
                        const std::array<int, kScales>& input_widths, bool topdown, Rng& rng) {
    FusionBlock fb;
    std::vector<int> entity_width(input_widths.begin(), input_widths.end());
    for (int j = 0; j < kScales; ++j) {
        FusionNode node;
        node.scale = topdown ? topdown_node_scale(j) : bottomup_node_scale(j);
        node.base_c = spec.fpn_channels[std::size_t(node.scale)];
        node.a_edge = alphas.nodes[std::size_t(j)].edge;
        for (int p = 0; p < fusion_node_preds(j); ++p) {
            FusionEdge e;
            e.uk = kernelreuse::make_unified_kernel<float>(node.base_c, entity_width[std::size_t(p)],
                                                           kernelreuse::edge_candidates(), rng, true);
            // the node averages its edges under softmax weights; scale each
            // edge up by sqrt(#preds) so the fused variance holds
            const float comp = float(std::sqrt(double(fusion_node_preds(j))));
            for (float& v : e.uk.theta.values()) v *= comp;
            e.a_op = alphas.nodes[std::size_t(j)].edges[std::size_t(p)].op;
            e.a_exp = alphas.nodes[std::size_t(j)].edges[std::size_t(p)].exp;
            e.pred = p;
            e.src_scale = p < kScales ? p : (topdown ? topdown_node_scale(p - kScales)
                                                     : bottomup_node_scale(p - kScales));
            e.dst_scale = node.scale;
            e.base_out = node.base_c;
            node.edges.push_back(std::move(e));
        }
        entity_width.push_back(node.base_c);
        fb.nodes.push_back(std::move(node));
    }
    for (int s = 0; s < kScales; ++s)
        fb.c3s.push_back(make_c3(spec.fpn_channels[std::size_t(s)],
                                 {spec.fpn_channels[std::size_t(s)], spec.fpn_c3_m},
                                 alphas.c3s[std::size_t(s)], rng));
    return fb;
}

}  // namespace

BuildResult build_supernet(const SearchSpaceSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.l_c() != kScales)
        throw ConfigError("build_supernet: the three-scale layout needs exactly 3 backbone C3 blocks");
    Rng rng(seed);
    ArchParams params = build_arch_params(spec);
    SuperNet net;
    net.spec = spec;
    net.stem = make_conv(12, spec.focus_channels, 3, rng);
    int prev = spec.focus_channels;
    for (int i = 0; i < spec.l_d(); ++i) {
        const int c = spec.down_channels[std::size_t(i)];
        net.downs.push_back(make_super_edge(prev, c, kernelreuse::edge_candidates(),
                                            params.ds_op[std::size_t(i)],
                                            params.ds_exp[std::size_t(i)], 2, rng));
        prev = c;
        if (i < spec.l_c()) {
            net.backbone.push_back(make_c3(prev, spec.backbone_c3[std::size_t(i)],
                                           params.backbone[std::size_t(i)], rng));
            prev = spec.backbone_c3[std::size_t(i)].channels;
        }
    }
    net.spp.base_c = spec.spp_channels;
    net.spp.cv1 = make_conv(prev, spec.spp_channels / 2, 1, rng);
    net.spp.cv2 = make_conv(2 * spec.spp_channels, spec.spp_channels, 1, rng);

    const std::array<int, kScales> td_inputs{net.backbone[1].base_c, net.backbone[2].base_c,
                                             spec.spp_channels};
    net.topdown = make_fusion(spec, params.topdown, td_inputs, true, rng);
    const std::array<int, kScales> bu_inputs{spec.fpn_channels[0], spec.fpn_channels[1],
                                             spec.fpn_channels[2]};
    net.bottomup = make_fusion(spec, params.bottomup, bu_inputs, false, rng);

    for (int s = 0; s < kScales; ++s) {
        net.heads[std::size_t(s)] =
            make_conv(spec.fpn_channels[std::size_t(s)], 5 + spec.n_classes, 1, rng);
        // small fixed-scale head init keeps the initial logits moderate even
        // when a sampled-width path runs hot
        for (float& v : net.heads[std::size_t(s)].w.values()) v *= 0.05f;
    }
    return {std::move(net), std::move(params)};
}

std::vector<TF> SuperNet::weight_tensors() const {
    std::vector<TF> out;
    auto push_conv = [&](const ConvBlock& cb) {
        out.push_back(cb.w);
        out.push_back(cb.b);
    };
    auto push_edge = [&](const SuperEdge& e) {
        out.push_back(e.uk.theta);
        out.push_back(e.uk.bias);
    };
    auto push_c3 = [&](const C3Block& c) {
        out.push_back(c.w1);
        out.push_back(c.b1);
        out.push_back(c.w2);
        out.push_back(c.b2);
        out.push_back(c.w3);
        out.push_back(c.b3);
        for (const auto& cell : c.cells) {
            out.push_back(cell.w1);
            out.push_back(cell.b1);
            push_edge(cell.conv2);
        }
    };
    push_conv(stem);
    for (const auto& d : downs) push_edge(d);
    for (const auto& c : backbone) push_c3(c);
    push_conv(spp.cv1);
    push_conv(spp.cv2);
    for (const FusionBlock* fb : {&topdown, &bottomup}) {
        for (const auto& node : fb->nodes)
            for (const auto& e : node.edges) {
                out.push_back(e.uk.theta);
                out.push_back(e.uk.bias);
            }
        for (const auto& c : fb->c3s) push_c3(c);
    }
    for (const auto& h : heads) push_conv(h);
    return out;
}

std::int64_t SuperNet::weight_param_count() const {
    std::int64_t n = 0;
    for (const auto& t : weight_tensors()) n += t.numel();
    return n;
}

namespace {

// Per-layer decision source: trained parameters (search/deterministic) or a
// genotype with exact coefficients (forced).
struct Decide {
    const ArchParams* params = nullptr;
    Rng* rng = nullptr;
    ForwardMode mode = ForwardMode::Deterministic;
    double tau = 1.0;
    bool forced = false;
    std::vector<LayerTrace>* trace = nullptr;

    TF op_mix(int a_op, const std::vector<CandidateOp>& cands, const std::string* forced_op) const {
        if (forced) {
            std::vector<float> v(cands.size(), 0.0f);
            const auto kind = kernelreuse::op_from_name(*forced_op);
            bool found = false;
            for (std::size_t i = 0; i < cands.size(); ++i)
                if (cands[i].kind == kind) {
                    v[i] = 1.0f;
                    found = true;
                }
            if (!found) throw InputError("forced op '" + *forced_op + "' is not a candidate here");
            return TF::vec(std::move(v));
        }
        return softmax_channels(params->tensor(a_op));
    }

    struct Pick {
        int channels = 0;
        TF gate;
    };

    Pick expansion(int a_exp, const std::vector<ExpansionRate>& rates, int base,
                   double forced_value, const std::string& name) const {
        ExpansionRate r;
        Pick pick;
        if (forced) {
            r = chansearch::expansion_from_value(forced_value);
            if (std::find(rates.begin(), rates.end(), r) == rates.end())
                throw InputError("forced expansion not in this layer's candidate set");
        } else if (mode == ForwardMode::Search) {
            auto sample = chansearch::gumbel_onehot(params->tensor(a_exp), *rng, tau);
            r = rates[std::size_t(sample.index)];
            pick.gate = select_component(chansearch::straight_through(sample), sample.index);
        } else {
            r = rates[std::size_t(argmax(params->values(a_exp)))];
        }
        pick.channels = r.apply(base);
        if (trace) trace->push_back({name, base, pick.channels, r.value()});
        return pick;
    }
};

// Width-compensation gain: weights are initialized for 3/4 of their stored
// input channels, and with no normalization layers the activation variance
// would otherwise scale with every sampled slice width. Folding
// sqrt(0.75 * stored / active) into the sliced kernel keeps the output
// scale width-independent; it is a deterministic scalar, so the compounding
// algebra and the materialized bridge are unaffected.
float width_gain(int stored_in, int active_in) {
    return float(std::sqrt(0.75 * double(stored_in) / double(active_in)));
}

// Fixed or width-sliced convolution (+ optional silu). Weights are sliced
// to the caller's active widths; gradients reach only the active region.
TF sliced_conv(const TF& w, const TF& b, const TF& x, int c_act, int stride, int padding,
               bool act, int dilation = 1) {
    TF ws = w;
    if (x.shape().c > w.shape().c)
        throw InputError("sliced_conv: input wider than the stored weight");
    if (x.shape().c < w.shape().c) ws = slice_dim1_range(ws, 0, x.shape().c);
    if (c_act > w.shape().n) throw InputError("sliced_conv: active channels exceed the weight");
    if (c_act < w.shape().n) ws = slice_dim0_prefix(ws, c_act);
    ws = scale(ws, width_gain(w.shape().c, x.shape().c));
    TF bs = b;
    if (bs.defined() && c_act < int(bs.numel())) bs = slice_dim1_range(bs, 0, c_act);
    TF y = conv2d(x, ws, bs, stride, padding, dilation);
    return act ? silu(y) : y;
}

// Searched convolution: compound the bank under the op mixture, slice to
// the active widths, run one convolution.
TF searched_conv(const Decide& D, const SuperEdge& e, const TF& x, int stride, bool act,
                 const std::string* forced_op, double forced_exp, const std::string& name) {
    TF mix = D.op_mix(e.a_op, e.uk.candidates, forced_op);
    Decide::Pick pick = D.expansion(e.a_exp, e.exp_rates, e.base_out, forced_exp, name);
    TF theta = e.uk.theta;
    if (x.shape().c > e.uk.c_in())
        throw InputError("searched_conv: input wider than the bank at " + name);
    if (x.shape().c < e.uk.c_in()) theta = slice_dim1_range(theta, 0, x.shape().c);
    if (pick.channels < e.uk.c_out()) theta = slice_dim0_prefix(theta, pick.channels);
    TF bias = e.uk.bias;
    if (bias.defined() && pick.channels < int(bias.numel()))
        bias = slice_dim1_range(bias, 0, pick.channels);
    TF kern = scale(kernelreuse::compound_kernel(theta, e.uk.masks, mix),
                    width_gain(e.uk.c_in(), x.shape().c));
    TF y = conv2d(x, kern, bias, stride, kernelreuse::kBankSize / 2, 1);
    if (act) y = silu(y);
    if (pick.gate.defined()) y = scale_by(y, pick.gate);
    return y;
}

TF bottleneck_fw(const Decide& D, const BottleneckCell& cell, const TF& x,
                 const BottleneckGene* forced, const std::string& name) {
    Decide::Pick e1 = D.expansion(cell.a_e1, chansearch::expansion_three(), cell.base_h,
                                  forced ? forced->expansion1 : 0.0, name + ".e1");
    TF y = sliced_conv(cell.w1, cell.b1, x, e1.channels, 1, 0, true);
    if (e1.gate.defined()) y = scale_by(y, e1.gate);
    const std::string* fop = nullptr;
    if (forced) fop = &forced->op;
    return searched_conv(D, cell.conv2, y, 1, true, fop, forced ? forced->expansion2 : 0.0,
                         name + ".e2");
}

TF c3_fw(const Decide& D, const C3Block& blk, const TF& x, const C3Gene* forced,
         const std::string& name) {
    Decide::Pick hidden = D.expansion(blk.a_exp, chansearch::expansion_two(), blk.base_h,
                                      forced ? forced->expansion : 0.0, name + ".exp");
    TF a = sliced_conv(blk.w1, blk.b1, x, hidden.channels, 1, 0, true);
    TF bypass = sliced_conv(blk.w2, blk.b2, x, hidden.channels, 1, 0, true);
    if (hidden.gate.defined()) {
        a = scale_by(a, hidden.gate);
        bypass = scale_by(bypass, hidden.gate);
    }
    TF chain = a;
    for (std::size_t j = 0; j < blk.cells.size(); ++j)
        chain = bottleneck_fw(D, blk.cells[j], chain,
                              forced ? &forced->cells[j] : nullptr,
                              name + ".b" + std::to_string(j));
    // merge conv in sum form: one weight block per concatenated input; the
    // two convolutions sum, so a single gain over their combined width
    const float g3 = width_gain(2 * blk.base_h, chain.shape().c + bypass.shape().c);
    TF w_chain = scale(slice_dim1_range(blk.w3, 0, chain.shape().c), g3);
    TF w_bypass = scale(slice_dim1_range(blk.w3, blk.base_h, bypass.shape().c), g3);
    TF y = add(conv2d(chain, w_chain, blk.b3, 1, 0), conv2d(bypass, w_bypass, 1, 0));
    return silu(y);
}

TF spp_fw(const SppBlock& spp, const TF& x) {
    TF a = sliced_conv(spp.cv1.w, spp.cv1.b, x, spp.cv1.w.shape().n, 1, 0, true);
    std::vector<TF> branches{a};
    for (int k : spp.pools) branches.push_back(maxpool2d(a, k, 1, k / 2));
    TF cat = concat_channels(branches);
    return sliced_conv(spp.cv2.w, spp.cv2.b, cat, spp.cv2.w.shape().n, 1, 0, true);
}

TF align_to_scale(TF x, int src_scale, int dst_scale) {
    while (src_scale > dst_scale) {
        x = upsample_nearest2x(x);
        src_scale--;
    }
    return x;
}

TF fusion_node_fw(const Decide& D, const FusionNode& node, const std::vector<TF>& entities,
                  const NodeGene* forced, const std::string& name) {
    TF z;
    if (!D.forced) {
        TF edge_w = softmax_channels(D.params->tensor(node.a_edge));
        for (std::size_t i = 0; i < node.edges.size(); ++i) {
            const FusionEdge& e = node.edges[i];
            TF x = align_to_scale(entities[std::size_t(e.pred)], e.src_scale, e.dst_scale);
            const int stride = e.dst_scale > e.src_scale ? 1 << (e.dst_scale - e.src_scale) : 1;
            SuperEdge se{e.uk, e.a_op, e.a_exp, chansearch::expansion_three(), e.base_out, stride};
            TF y = searched_conv(D, se, x, stride, false, nullptr, 0.0,
                                 name + ".p" + std::to_string(i));
            y = scale_by(y, select_component(edge_w, int(i)));
            z = z.defined() ? add_widen(z, y) : y;
        }
    } else {
        for (const EdgeGene& eg : forced->edges) {
            const FusionEdge& e = node.edges[std::size_t(eg.pred)];
            TF x = align_to_scale(entities[std::size_t(e.pred)], e.src_scale, e.dst_scale);
            const int stride = e.dst_scale > e.src_scale ? 1 << (e.dst_scale - e.src_scale) : 1;
            SuperEdge se{e.uk, -1, -1, chansearch::expansion_three(), e.base_out, stride};
            TF y = searched_conv(D, se, x, stride, false, &eg.op, eg.expansion,
                                 name + ".p" + std::to_string(eg.pred));
            z = z.defined() ? add_widen(z, scale(y, 0.5f)) : scale(y, 0.5f);
        }
    }
    return z;
}

std::array<TF, kScales> fusion_block_fw(const Decide& D, const FusionBlock& fb,
                                        const std::array<TF, kScales>& inputs,
                                        const FusionGene* forced, const std::string& name) {
    std::vector<TF> entities(inputs.begin(), inputs.end());
    std::array<TF, kScales> out;
    for (std::size_t j = 0; j < fb.nodes.size(); ++j) {
        const FusionNode& node = fb.nodes[j];
        const NodeGene* fg = forced ? &forced->nodes[j] : nullptr;
        if (fg && fg->stride != kStrides[node.scale])
            throw InputError("genotype node stride does not match the supernet layout");
        TF z = fusion_node_fw(D, node, entities, fg, name + ".n" + std::to_string(j));
        entities.push_back(z);
        out[std::size_t(node.scale)] =
            c3_fw(D, fb.c3s[std::size_t(node.scale)], z, fg ? &fg->c3 : nullptr,
                  name + ".c3_" + std::to_string(node.scale));
    }
    return out;
}

ForwardResult forward_impl(const SuperNet& net, const Decide& D0, const TF& image,
                           const Genotype* geno) {
    if (image.shape().h % 32 != 0 || image.shape().w % 32 != 0 || image.shape().h < 32 ||
        image.shape().w < 32)
        throw InputError("forward: image spatial dims must be positive multiples of 32");
    if (image.shape().c != 3) throw InputError("forward: expected a 3-channel image");

    ForwardResult result;
    Decide D = D0;
    D.trace = &result.trace;

    TF x = silu(conv2d(space_to_depth2(image), net.stem.w, net.stem.b, 1, 1));
    std::array<TF, kScales> taps;
    for (int i = 0; i < net.spec.l_d(); ++i) {
        const DownsampleGene* fg = geno ? &geno->downs[std::size_t(i)] : nullptr;
        const std::string* fop = fg ? &fg->op : nullptr;
        x = searched_conv(D, net.downs[std::size_t(i)], x, 2, true, fop,
                          fg ? fg->expansion : 0.0, "bb.down" + std::to_string(i));
        if (i < net.spec.l_c()) {
            x = c3_fw(D, net.backbone[std::size_t(i)], x,
                      geno ? &geno->backbone[std::size_t(i)] : nullptr,
                      "bb.c3_" + std::to_string(i));
            if (i >= 1) taps[std::size_t(i - 1)] = x;  // strides 8 and 16
        }
    }
    x = spp_fw(net.spp, x);
    taps[2] = x;  // stride 32

    std::array<TF, kScales> td = fusion_block_fw(D, net.topdown, taps,
                                                 geno ? &geno->topdown : nullptr, "fpn.td");
    std::array<TF, kScales> bu = fusion_block_fw(D, net.bottomup, td,
                                                 geno ? &geno->bottomup : nullptr, "fpn.bu");
    result.features = bu;
    for (int s = 0; s < kScales; ++s)
        result.preds[std::size_t(s)] =
            conv2d(bu[std::size_t(s)], net.heads[std::size_t(s)].w, net.heads[std::size_t(s)].b, 1, 0);
    return result;
}

}  // namespace

ForwardResult forward(const SuperNet& net, const ArchParams& params, const TF& image, Rng& rng,
                      ForwardMode mode, double tau) {
    Decide D;
    D.params = &params;
    D.rng = &rng;
    D.mode = mode;
    D.tau = tau;
    return forward_impl(net, D, image, nullptr);
}

ForwardResult forward_forced(const SuperNet& net, const Genotype& geno, const TF& image) {
    geno.validate();
    if (!(geno.echo == net.spec))
        throw InputError("forward_forced: genotype was derived from a different space");
    Decide D;
    D.forced = true;
    return forward_impl(net, D, image, &geno);
}

}  // namespace supernet
