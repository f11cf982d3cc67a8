#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "diffcore/conv.hpp"
#include "diffcore/gradcheck.hpp"
#include "diffcore/ops.hpp"
#include "kernelreuse/candidates.hpp"
#include "kernelreuse/unified_kernel.hpp"
#include "oracles.hpp"

using namespace diffcore;
using namespace kernelreuse;
using oracles::random_tensor;
using oracles::rel_error_norm;

using TF = Tensor<float>;
using TD = Tensor<double>;

namespace {

// Oracle for one candidate: zero out the bank outside the mask and run a
// plain 5x5 convolution at padding 2.
template <typename T>
Tensor<T> candidate_conv_ref(const Tensor<T>& x, const UnifiedKernel<T>& uk, std::size_t o,
                             int stride) {
    std::vector<T> w = uk.theta.values();
    const std::int64_t planes = std::int64_t(uk.c_out()) * uk.c_in();
    for (std::int64_t p = 0; p < planes; ++p)
        for (int i = 0; i < 25; ++i)
            if (!uk.masks[o].on[std::size_t(i)]) w[std::size_t(p * 25 + i)] = T(0);
    return conv2d(x, Tensor<T>::from(uk.theta.shape(), std::move(w)), stride, 2);
}

// Explicit weighted sum over all candidates run separately.
template <typename T>
std::vector<double> weighted_sum_ref(const Tensor<T>& x, const UnifiedKernel<T>& uk,
                                     const std::vector<double>& alpha, int stride) {
    std::vector<double> acc;
    for (std::size_t o = 0; o < uk.candidates.size(); ++o) {
        Tensor<T> y = candidate_conv_ref(x, uk, o, stride);
        if (acc.empty()) acc.assign(y.values().size(), 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += alpha[o] * double(y.values()[i]);
    }
    return acc;
}

template <typename T>
UnifiedKernel<T> random_uk(int c_out, int c_in, Rng& rng, bool with_bias = false) {
    return make_unified_kernel<T>(c_out, c_in, edge_candidates(), rng, with_bias);
}

}  // namespace

TEST_CASE("build_mask geometry") {
    Mask m1 = build_mask(candidate(OpKind::Conv1x1));
    CHECK(m1.support() == 1);
    CHECK(m1.at(2, 2));

    Mask m3 = build_mask(candidate(OpKind::Conv3x3));
    CHECK(m3.support() == 9);
    for (int r = 1; r <= 3; ++r)
        for (int c = 1; c <= 3; ++c) CHECK(m3.at(r, c));
    CHECK_FALSE(m3.at(0, 0));

    Mask m5 = build_mask(candidate(OpKind::Conv5x5));
    CHECK(m5.support() == 25);

    Mask md = build_mask(candidate(OpKind::Conv3x3Dilated2));
    CHECK(md.support() == 9);
    for (int r : {0, 2, 4})
        for (int c : {0, 2, 4}) CHECK(md.at(r, c));
    CHECK_FALSE(md.at(1, 1));

    CHECK_THROWS_AS(build_mask(CandidateOp{OpKind::Conv5x5, 5, 2, 4}), ConfigError);
}

TEST_CASE("mask nesting: 1x1 in 3x3 in 5x5; dilated not inside 3x3") {
    Mask m1 = build_mask(candidate(OpKind::Conv1x1));
    Mask m3 = build_mask(candidate(OpKind::Conv3x3));
    Mask m5 = build_mask(candidate(OpKind::Conv5x5));
    Mask md = build_mask(candidate(OpKind::Conv3x3Dilated2));
    for (int i = 0; i < 25; ++i) {
        if (m1.on[std::size_t(i)]) CHECK(m3.on[std::size_t(i)]);
        if (m3.on[std::size_t(i)]) CHECK(m5.on[std::size_t(i)]);
    }
    CHECK(m1.support() < m3.support());
    CHECK(m3.support() < m5.support());
    bool dil_escapes_3x3 = false;
    for (int i = 0; i < 25; ++i)
        if (md.on[std::size_t(i)] && !m3.on[std::size_t(i)]) dil_escapes_3x3 = true;
    CHECK(dil_escapes_3x3);
}

TEST_CASE("compound_kernel special alphas") {
    Rng rng(31);
    UnifiedKernel<float> uk = random_uk<float>(3, 2, rng);

    // one-hot on the full 5x5 candidate returns theta unchanged
    TF a5 = TF::vec({0.0f, 0.0f, 1.0f, 0.0f});
    TF k5 = compound_kernel(uk, a5);
    CHECK(rel_error_norm(k5.values(), uk.theta.values()) == 0.0);

    // all-zero alpha annihilates
    TF a0 = TF::vec({0.0f, 0.0f, 0.0f, 0.0f});
    TF k0 = compound_kernel(uk, a0);
    for (float v : k0.values()) CHECK(v == 0.0f);

    // uniform alpha: center tap coefficient 1.0, corner tap 0.5
    TF au = TF::vec({0.25f, 0.25f, 0.25f, 0.25f});
    TF ku = compound_kernel(uk, au);
    const float center = uk.theta.at(0, 0, 2, 2);
    CHECK(ku.at(0, 0, 2, 2) == doctest::Approx(center * 1.0f));
    const float corner = uk.theta.at(0, 0, 0, 0);
    CHECK(ku.at(0, 0, 0, 0) == doctest::Approx(corner * 0.5f));

    CHECK_THROWS_AS(compound_kernel(uk, TF::vec({1.0f, 0.0f})), InputError);
}

TEST_CASE("compound_conv one-hot equals the native candidate convolution") {
    Rng rng(32);
    UnifiedKernel<float> uk = random_uk<float>(3, 2, rng, true);
    TF x = random_tensor<float>({1, 2, 6, 6}, rng);
    for (int stride : {1, 2}) {
        for (std::size_t o = 0; o < uk.candidates.size(); ++o) {
            std::vector<float> av(4, 0.0f);
            av[o] = 1.0f;
            TF got = compound_conv(x, uk, TF::vec(std::vector<float>(av)), stride);
            TF native = extract_candidate_kernel(uk, uk.candidates[o]);
            TF want = conv2d(x, native, uk.bias, stride, uk.candidates[o].padding,
                             uk.candidates[o].dilation);
            REQUIRE(got.shape() == want.shape());
            CHECK(rel_error_norm(got.values(), want.values()) < 1e-6);
        }
    }
}

TEST_CASE("compound_conv: zero input gives zero output without bias") {
    Rng rng(33);
    UnifiedKernel<float> uk = random_uk<float>(2, 3, rng);
    TF x = TF::zeros({1, 3, 5, 5});
    TF a = TF::vec({0.3f, 0.4f, 0.2f, 0.1f});
    TF y = compound_conv(x, uk, a, 1);
    for (float v : y.values()) CHECK(v == 0.0f);
}

TEST_CASE("Eq-style equivalence: one compounded conv equals the weighted sum") {
    Rng rng(34);
    for (int rep = 0; rep < 20; ++rep) {
        const int cin = 1 + rng.bounded(3);
        const int cout = 1 + rng.bounded(3);
        const int stride = 1 + rng.bounded(2);
        UnifiedKernel<float> uk = random_uk<float>(cout, cin, rng);
        TF x = random_tensor<float>({1, cin, 6, 6}, rng);
        std::vector<double> raw(4);
        for (double& v : raw) v = rng.uniform(-1.0, 1.0);
        std::vector<double> alpha = softmax(raw);
        std::vector<float> af(alpha.begin(), alpha.end());
        TF got = compound_conv(x, uk, TF::vec(std::move(af)), stride);
        std::vector<double> want =
            weighted_sum_ref(x, uk, {alpha.begin(), alpha.end()}, stride);
        CHECK(rel_error_norm(got.values(), want) < 1e-5);
    }
}

TEST_CASE("compound_conv rejects channel overflow") {
    Rng rng(35);
    UnifiedKernel<float> uk = random_uk<float>(2, 2, rng);
    TF x = TF::zeros({1, 3, 5, 5});
    CHECK_THROWS_AS(compound_conv(x, uk, TF::vec({1.f, 0.f, 0.f, 0.f}), 1), InputError);
}

TEST_CASE("extract_candidate_kernel shapes and values") {
    Rng rng(36);
    UnifiedKernel<float> uk = random_uk<float>(2, 2, rng);

    TF k5 = extract_candidate_kernel(uk, candidate(OpKind::Conv5x5));
    CHECK(rel_error_norm(k5.values(), uk.theta.values()) == 0.0);

    TF k1 = extract_candidate_kernel(uk, candidate(OpKind::Conv1x1));
    REQUIRE(k1.shape() == Shape{2, 2, 1, 1});
    for (int co = 0; co < 2; ++co)
        for (int ci = 0; ci < 2; ++ci) CHECK(k1.at(co, ci, 0, 0) == uk.theta.at(co, ci, 2, 2));

    TF kd = extract_candidate_kernel(uk, candidate(OpKind::Conv3x3Dilated2));
    REQUIRE(kd.shape() == Shape{2, 2, 3, 3});
    CHECK(kd.at(0, 0, 0, 0) == uk.theta.at(0, 0, 0, 0));
    CHECK(kd.at(0, 0, 1, 1) == uk.theta.at(0, 0, 2, 2));

    UnifiedKernel<float> uk3 = make_unified_kernel<float>(2, 2, bottleneck_candidates(), rng);
    CHECK_THROWS_AS(extract_candidate_kernel(uk3, candidate(OpKind::Conv1x1)), InputError);
}

TEST_CASE("shared-bank parameter count vs independent candidates") {
    Rng rng(37);
    const int cin = 6, cout = 10;
    UnifiedKernel<float> uk = random_uk<float>(cout, cin, rng, true);
    const std::int64_t stored = std::int64_t(uk.theta.numel()) + uk.bias.numel();
    CHECK(stored == unified_edge_params(cin, cout));
    CHECK(unified_edge_params(cin, cout) == 25 * cin * cout + cout);
    CHECK(independent_edge_params(cin, cout) == 44 * cin * cout + 4 * cout);
    const double ratio = double(25 * cin * cout) / double(44 * cin * cout);
    CHECK(ratio == doctest::Approx(25.0 / 44.0));
    CHECK(25.0 / 44.0 == doctest::Approx(0.568).epsilon(1e-3));
}

TEST_CASE("weight sharing is real: the center tap reaches every candidate") {
    Rng rng(38);
    UnifiedKernel<float> uk = random_uk<float>(1, 1, rng);
    TF x = random_tensor<float>({1, 1, 4, 4}, rng);
    std::vector<std::vector<float>> before;
    for (const auto& op : uk.candidates)
        before.push_back(conv2d(x, extract_candidate_kernel(uk, op), 1, op.padding, op.dilation).values());

    uk.theta.values()[std::size_t(uk.theta.index(0, 0, 2, 2))] += 1.0f;
    for (std::size_t o = 0; o < uk.candidates.size(); ++o) {
        const auto& op = uk.candidates[o];
        auto after = conv2d(x, extract_candidate_kernel(uk, op), 1, op.padding, op.dilation).values();
        CHECK(rel_error_norm(after, before[o]) > 1e-4);
    }
}

TEST_CASE("gradcheck: compound_conv w.r.t. theta and alpha") {
    Rng rng(39);
    auto run = [&](auto tag, double eps, double tol) {
        using T = decltype(tag);
        UnifiedKernel<T> uk = make_unified_kernel<T>(3, 2, edge_candidates(), rng, true);
        std::vector<Tensor<T>> ins{uk.theta, Tensor<T>::vec({T(0.4), T(0.3), T(0.2), T(0.1)}, true),
                                   uk.bias};
        Tensor<T> x = random_tensor<T>({1, 2, 5, 5}, rng);
        auto masks = uk.masks;
        auto f = [x, masks](const std::vector<Tensor<T>>& in) {
            Tensor<T> kern = compound_kernel(in[0], masks, in[1]);
            return conv2d(x, kern, in[2], 1, 2);
        };
        CHECK(gradcheck<T>(f, ins, eps) < tol);
    };
    run(float{}, 0.1, 1e-3);
    run(double{}, 1e-5, 1e-5);
}

TEST_CASE("compound_kernel gradcheck stride 2 path") {
    Rng rng(40);
    UnifiedKernel<double> uk = make_unified_kernel<double>(2, 2, edge_candidates(), rng);
    Tensor<double> x = random_tensor<double>({1, 2, 6, 6}, rng);
    auto masks = uk.masks;
    std::vector<Tensor<double>> ins{uk.theta, Tensor<double>::vec({0.1, 0.5, 0.2, 0.2}, true)};
    auto f = [x, masks](const std::vector<Tensor<double>>& in) {
        return conv2d(x, compound_kernel(in[0], masks, in[1]), 2, 2);
    };
    CHECK(gradcheck<double>(f, ins, 1e-5) < 1e-5);
}
