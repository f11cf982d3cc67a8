#include "cli/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "chansearch/gumbel.hpp"
#include "chansearch/slicing.hpp"
#include "chansearch/temperature.hpp"
#include "diffcore/conv.hpp"
#include "diffcore/gradcheck.hpp"
#include "diffcore/ops.hpp"
#include "kernelreuse/unified_kernel.hpp"
#include "search/loss.hpp"
#include "supernet/counting.hpp"
#include "supernet/derive.hpp"
#include "supernet/json_io.hpp"

namespace cli {

using namespace diffcore;
using kernelreuse::edge_candidates;
using kernelreuse::make_unified_kernel;
using kernelreuse::UnifiedKernel;
using TF = Tensor<float>;
using TD = Tensor<double>;

namespace {

template <typename T>
Tensor<T> rand_tensor(Shape s, Rng& rng, bool rg = false) {
    std::vector<T> v(std::size_t(s.numel()));
    for (T& x : v) x = T(rng.uniform(-1.0, 1.0));
    return Tensor<T>::from(s, std::move(v), rg);
}

template <typename A, typename B>
double rel_err(const std::vector<A>& a, const std::vector<B>& b) {
    double diff = 0.0, scale = 1e-8;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(double(a[i]) - double(b[i])));
        scale = std::max({scale, std::abs(double(a[i])), std::abs(double(b[i]))});
    }
    return diff / scale;
}

CheckResult check_eq1(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
        const int cin = 1 + rng.bounded(3), cout = 1 + rng.bounded(3);
        const int stride = 1 + rng.bounded(2);
        UnifiedKernel<float> uk = make_unified_kernel<float>(cout, cin, edge_candidates(), rng);
        TF x = rand_tensor<float>({1, cin, 6, 6}, rng);
        std::vector<double> raw(4);
        for (double& v : raw) v = rng.uniform(-1.0, 1.0);
        std::vector<double> alpha = softmax(raw);
        TF got = compound_conv(x, uk, TF::vec({float(alpha[0]), float(alpha[1]),
                                               float(alpha[2]), float(alpha[3])}),
                               stride);
        std::vector<double> want;
        for (std::size_t o = 0; o < 4; ++o) {
            std::vector<float> w = uk.theta.values();
            for (std::int64_t p = 0; p < std::int64_t(cout) * cin; ++p)
                for (int i = 0; i < 25; ++i)
                    if (!uk.masks[o].on[std::size_t(i)]) w[std::size_t(p * 25 + i)] = 0.0f;
            TF y = conv2d(x, TF::from(uk.theta.shape(), std::move(w)), stride, 2);
            if (want.empty()) want.assign(y.values().size(), 0.0);
            for (std::size_t i = 0; i < want.size(); ++i)
                want[i] += alpha[o] * double(y.values()[i]);
        }
        worst = std::max(worst, rel_err(got.values(), want));
    }
    char d[64];
    std::snprintf(d, sizeof(d), "max rel err %.2e (tol 1e-5)", worst);
    return {"compound-conv equivalence", worst <= 1e-5, d};
}

CheckResult check_prop1(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
        const int m = 1 + rng.bounded(3);
        const int k = 1 + 2 * rng.bounded(3);
        const int stride = 1 + rng.bounded(2);
        std::vector<int> splits;
        std::vector<TF> xs;
        int total = 0;
        for (int i = 0; i < m; ++i) {
            const int c = 1 + rng.bounded(3);
            splits.push_back(c);
            total += c;
            xs.push_back(rand_tensor<float>({1, c, 6, 6}, rng));
        }
        TF w = rand_tensor<float>({3, total, k, k}, rng);
        TF want = conv2d(concat_channels<float>(xs), w, stride, k / 2);
        auto blocks = chansearch::concat_conv_to_sum(w, splits);
        TF got;
        for (int i = 0; i < m; ++i) {
            TF y = conv2d(xs[std::size_t(i)], blocks[std::size_t(i)], stride, k / 2);
            got = got.defined() ? add(got, y) : y;
        }
        worst = std::max(worst, rel_err(got.values(), want.values()));
    }
    char d[64];
    std::snprintf(d, sizeof(d), "max rel err %.2e (tol 1e-5)", worst);
    return {"concat-to-sum equivalence", worst <= 1e-5, d};
}

CheckResult check_gumbel(Rng& rng) {
    const std::vector<double> p{0.7, 0.2, 0.1};
    const std::vector<double> alpha{std::log(0.7), std::log(0.2), std::log(0.1)};
    const int draws = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i)
        counts[std::size_t(chansearch::gumbel_argmax(alpha, chansearch::draw_gumbel(rng, 3)))]++;
    double max_dev = 0.0, chi2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double freq = double(counts[std::size_t(i)]) / draws;
        max_dev = std::max(max_dev, std::abs(freq - p[std::size_t(i)]));
        const double expd = p[std::size_t(i)] * draws;
        chi2 += (counts[std::size_t(i)] - expd) * (counts[std::size_t(i)] - expd) / expd;
    }
    char d[96];
    std::snprintf(d, sizeof(d), "max |freq-p| %.4f (tol 0.01), chi2 %.2f (crit 9.21)", max_dev, chi2);
    return {"gumbel-argmax categorical sampling", max_dev <= 0.01 && chi2 < 9.21034, d};
}

CheckResult check_straight_through(Rng& rng) {
    double worst = 0.0;
    bool onehot_ok = true;
    for (int rep = 0; rep < 25; ++rep) {
        const int k = 2 + rng.bounded(4);
        std::vector<double> av(std::size_t(k), 0.0);
        for (double& v : av) v = rng.uniform(-1.0, 1.0);
        TD alpha = TD::vec(std::vector<double>(av), true);
        const double tau = rng.uniform(0.2, 3.0);
        auto sample = chansearch::gumbel_onehot(alpha, rng, tau);
        TD st = chansearch::straight_through(sample);
        for (double v : st.values())
            if (v != 0.0 && v != 1.0) onehot_ok = false;

        std::vector<double> c(std::size_t(k), 0.0);
        for (double& v : c) v = rng.uniform(-1.0, 1.0);
        alpha.zero_grad();
        backward(weighted_sum(st, c));
        const double eps = 1e-6;
        for (int j = 0; j < k; ++j) {
            std::vector<double> hi = av, lo = av;
            hi[std::size_t(j)] += eps;
            lo[std::size_t(j)] -= eps;
            auto rh = chansearch::gumbel_softmax_values(hi, sample.g, tau);
            auto rl = chansearch::gumbel_softmax_values(lo, sample.g, tau);
            double fd = 0.0;
            for (int i = 0; i < k; ++i) fd += c[std::size_t(i)] * (rh[std::size_t(i)] - rl[std::size_t(i)]) / (2 * eps);
            const double a = double(alpha.grad()[std::size_t(j)]);
            worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8}));
        }
    }
    char d[80];
    std::snprintf(d, sizeof(d), "binary forward %s, grad vs relaxed fd %.2e (tol 1e-5)",
                  onehot_ok ? "ok" : "BROKEN", worst);
    return {"straight-through contract", onehot_ok && worst <= 1e-5, d};
}

CheckResult check_gradients(Rng& rng) {
    double worst64 = 0.0, worst32 = 0.0;
    {
        auto f = [](const std::vector<TD>& in) { return conv2d(in[0], in[1], in[2], 2, 1, 1); };
        worst64 = std::max(worst64, gradcheck<double>(f, {rand_tensor<double>({1, 2, 6, 6}, rng, true),
                                                          rand_tensor<double>({3, 2, 3, 3}, rng, true),
                                                          rand_tensor<double>({1, 3, 1, 1}, rng, true)},
                                                      1e-5));
        auto ff = [](const std::vector<TF>& in) { return conv2d(in[0], in[1], in[2], 2, 1, 1); };
        worst32 = std::max(worst32, gradcheck<float>(ff, {rand_tensor<float>({1, 2, 6, 6}, rng, true),
                                                          rand_tensor<float>({3, 2, 3, 3}, rng, true),
                                                          rand_tensor<float>({1, 3, 1, 1}, rng, true)},
                                                     0.1));
    }
    {
        UnifiedKernel<double> uk = make_unified_kernel<double>(2, 2, edge_candidates(), rng);
        TD x = rand_tensor<double>({1, 2, 5, 5}, rng);
        auto masks = uk.masks;
        auto f = [x, masks](const std::vector<TD>& in) {
            return conv2d(x, kernelreuse::compound_kernel(in[0], masks, in[1]), 1, 2);
        };
        worst64 = std::max(worst64, gradcheck<double>(f, {uk.theta, TD::vec({0.4, 0.3, 0.2, 0.1}, true)},
                                                      1e-5));
    }
    {
        auto g = chansearch::draw_gumbel(rng, 4);
        auto f = [g](const std::vector<TD>& in) { return chansearch::gumbel_softmax(in[0], g, 0.7); };
        worst64 = std::max(worst64, gradcheck<double>(f, {rand_tensor<double>({1, 4, 1, 1}, rng, true)},
                                                      1e-5));
    }
    {
        search::BatchTargets targets;
        targets.cells[0].push_back({0, 1, 1, 1, {0.3f, 0.4f, 0.2f, 0.3f}});
        targets.cells[1].push_back({0, 0, 1, 0, {0.6f, 0.1f, 0.3f, 0.2f}});
        auto f = [targets](const std::vector<TD>& in) {
            return search::detection_loss<double>({in[0], in[1], in[2]}, targets, 3);
        };
        worst64 = std::max(worst64,
                           gradcheck<double>(f, {rand_tensor<double>({1, 8, 4, 4}, rng, true),
                                                 rand_tensor<double>({1, 8, 2, 2}, rng, true),
                                                 rand_tensor<double>({1, 8, 1, 1}, rng, true)},
                                             1e-5));
    }
    char d[80];
    std::snprintf(d, sizeof(d), "64-bit max %.2e (tol 1e-5), 32-bit max %.2e (tol 1e-3)", worst64,
                  worst32);
    return {"gradient checks", worst64 <= 1e-5 && worst32 <= 1e-3, d};
}

CheckResult check_counts() {
    struct Row {
        const char* level;
        const char* backbone;
        const char* fpn;
        const char* total;
    };
    const Row rows[] = {{"s", "7.9e11", "9.8e24", "7.7e36"},
                        {"m", "3.8e18", "5.2e30", "2.0e49"},
                        {"l", "1.8e25", "2.8e36", "5.0e61"},
                        {"x", "8.7e31", "1.5e42", "1.3e74"}};
    bool ok = true;
    std::string detail;
    for (const Row& r : rows) {
        auto c = supernet::count_search_space(supernet::SearchSpaceSpec::preset(r.level));
        if (c.backbone_sci != r.backbone || c.fpn_sci != r.fpn || c.total_sci != r.total) {
            ok = false;
            detail += std::string(r.level) + ": got " + c.backbone_sci + "/" + c.fpn_sci + "/" +
                      c.total_sci + " want " + r.backbone + "/" + r.fpn + "/" + r.total + "; ";
        }
    }
    if (ok) detail = "all 12 published entries reproduced at 2 significant figures";
    return {"search-space counts", ok, detail};
}

CheckResult check_masks() {
    using namespace kernelreuse;
    Mask m1 = build_mask(candidate(OpKind::Conv1x1));
    Mask m3 = build_mask(candidate(OpKind::Conv3x3));
    Mask m5 = build_mask(candidate(OpKind::Conv5x5));
    Mask md = build_mask(candidate(OpKind::Conv3x3Dilated2));
    bool ok = m1.support() == 1 && m3.support() == 9 && m5.support() == 25 && md.support() == 9;
    for (int i = 0; i < 25; ++i) {
        if (m1.on[std::size_t(i)] && !m3.on[std::size_t(i)]) ok = false;
        if (m3.on[std::size_t(i)] && !m5.on[std::size_t(i)]) ok = false;
    }
    bool escapes = false;
    for (int i = 0; i < 25; ++i)
        if (md.on[std::size_t(i)] && !m3.on[std::size_t(i)]) escapes = true;
    ok = ok && escapes;
    return {"mask geometry and nesting", ok,
            "supports 1/9/25/9, 1x1 in 3x3 in 5x5, dilated escapes 3x3"};
}

CheckResult check_params_ratio() {
    const std::int64_t uni = kernelreuse::unified_edge_params(16, 32);
    const std::int64_t ind = kernelreuse::independent_edge_params(16, 32);
    const bool ok = uni == 25 * 16 * 32 + 32 && ind == 44 * 16 * 32 + 4 * 32;
    char d[96];
    std::snprintf(d, sizeof(d), "%lld vs %lld per edge, weight ratio %.3f", (long long)uni,
                  (long long)ind, 25.0 / 44.0);
    return {"shared-bank parameter saving", ok, d};
}

CheckResult check_slicing(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        TF x = rand_tensor<float>({1, 3, 6, 6}, rng);
        TF w = rand_tensor<float>({4, 3, 3, 3}, rng);
        const int c = 1 + rng.bounded(4);
        TF sliced = conv2d(x, chansearch::slice_out_channels(w, c), 1, 1);
        TF prefix = slice_dim1_range(conv2d(x, w, 1, 1), 0, c);
        worst = std::max(worst, rel_err(sliced.values(), prefix.values()));
    }
    char d[64];
    std::snprintf(d, sizeof(d), "max rel err %.2e (exact expected)", worst);
    return {"prefix slicing consistency", worst == 0.0, d};
}

CheckResult check_temperature() {
    bool ok = std::abs(chansearch::temperature(0, 100, 5.0, 0.1) - 5.0) < 1e-12 &&
              std::abs(chansearch::temperature(100, 100, 5.0, 0.1) - 0.1) < 1e-12;
    double prev = 1e9;
    for (int s = 0; s <= 40; ++s) {
        const double t = chansearch::temperature(s, 40, 5.0, 0.1);
        if (t > prev + 1e-15) ok = false;
        prev = t;
    }
    return {"temperature schedule", ok, "boundaries exact, monotone non-increasing"};
}

CheckResult check_derive_and_roundtrip(Rng& rng) {
    const auto spec = supernet::SearchSpaceSpec::preset("s-mini");
    // zero-initialized parameters: every choice falls to the lowest index
    supernet::ArchParams zero = supernet::build_arch_params(spec);
    supernet::Genotype g0 = supernet::derive(zero, spec);
    bool ok = true;
    for (const auto& d : g0.downs) ok = ok && d.op == "conv1x1" && d.expansion == 0.5;
    for (const auto& n : g0.topdown.nodes)
        ok = ok && n.edges[0].pred == 0 && n.edges[1].pred == 1;
    // random parameters round-trip through json
    supernet::ArchParams p = supernet::build_arch_params(spec);
    for (auto& v : p.vecs)
        for (auto& x : v.t.values()) x = float(rng.uniform(-2.0, 2.0));
    supernet::Genotype g = supernet::derive(p, spec);
    const std::string text = supernet::genotype_to_json(g);
    ok = ok && supernet::genotype_from_json(text) == g &&
         supernet::genotype_to_json(supernet::genotype_from_json(text)) == text;
    return {"derivation tie-break and genotype round-trip", ok,
            "zero-alpha lowest-index choices, json parse/serialize stable"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
    Rng rng(0x5E1FC43CULL);
    std::vector<CheckResult> results;
    results.push_back(check_eq1(rng));
    results.push_back(check_prop1(rng));
    results.push_back(check_gumbel(rng));
    results.push_back(check_straight_through(rng));
    results.push_back(check_gradients(rng));
    results.push_back(check_counts());
    results.push_back(check_masks());
    results.push_back(check_params_ratio());
    results.push_back(check_slicing(rng));
    results.push_back(check_temperature());
    results.push_back(check_derive_and_roundtrip(rng));
    return results;
}

}  // namespace cli
