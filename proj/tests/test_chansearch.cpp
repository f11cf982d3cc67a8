#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chansearch/gumbel.hpp"
#include "chansearch/slicing.hpp"
#include "chansearch/temperature.hpp"
#include "diffcore/conv.hpp"
#include "diffcore/gradcheck.hpp"
#include "kernelreuse/unified_kernel.hpp"
#include "oracles.hpp"

using namespace diffcore;
using namespace chansearch;
using oracles::random_tensor;
using oracles::rel_error_norm;

using TF = Tensor<float>;
using TD = Tensor<double>;

namespace {

std::vector<double> empirical_freqs(const std::vector<double>& alpha, int draws, Rng& rng) {
    std::vector<int> counts(alpha.size(), 0);
    for (int i = 0; i < draws; ++i)
        counts[std::size_t(gumbel_argmax(alpha, draw_gumbel(rng, alpha.size())))]++;
    std::vector<double> freq(alpha.size());
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i] = double(counts[i]) / draws;
    return freq;
}

double chi_square(const std::vector<double>& freq, const std::vector<double>& p, int draws) {
    double stat = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        const double obs = freq[i] * draws;
        const double exp = p[i] * draws;
        stat += (obs - exp) * (obs - exp) / exp;
    }
    return stat;
}

}  // namespace

TEST_CASE("gumbel_argmax with zero noise is plain argmax") {
    std::vector<double> alpha{0.1, 2.0, -1.0};
    std::vector<double> zeros(3, 0.0);
    CHECK(gumbel_argmax(alpha, zeros) == 1);
    CHECK_THROWS_AS(gumbel_argmax({}, {}), InputError);
}

TEST_CASE("gumbel_argmax samples the categorical exactly (uniform)") {
    Rng rng(101);
    std::vector<double> alpha{0.0, 0.0, 0.0};
    auto freq = empirical_freqs(alpha, 100000, rng);
    for (double f : freq) CHECK(std::abs(f - 1.0 / 3.0) < 0.01);
}

TEST_CASE("gumbel_argmax samples the categorical exactly (0.7/0.2/0.1) + chi-square") {
    Rng rng(102);
    std::vector<double> p{0.7, 0.2, 0.1};
    std::vector<double> alpha{std::log(0.7), std::log(0.2), std::log(0.1)};
    const int draws = 100000;
    auto freq = empirical_freqs(alpha, draws, rng);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(freq[i] - p[i]) < 0.01);
    // df = 2, significance 0.01 -> critical value 9.21034
    CHECK(chi_square(freq, p, draws) < 9.21034);
}

TEST_CASE("gumbel_softmax normalizes and respects temperature limits") {
    Rng rng(103);
    TD alpha = TD::vec({0.3, -0.5, 1.2, 0.1});
    auto g = draw_gumbel(rng, 4);

    TD rel = gumbel_softmax(alpha, g, 1.0);
    double s = 0.0;
    for (double v : rel.values()) {
        CHECK(v > 0.0);
        s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));

    // low temperature concentrates
    TD cold = gumbel_softmax(alpha, g, 0.01);
    double mx = 0.0;
    for (double v : cold.values()) mx = std::max(mx, v);
    CHECK(mx > 0.99);

    // high temperature flattens
    TD hot = gumbel_softmax(alpha, g, 100.0);
    for (double v : hot.values()) CHECK(std::abs(v - 0.25) < 0.01);

    CHECK_THROWS_AS(gumbel_softmax(alpha, g, 0.0), ConfigError);
    CHECK_THROWS_AS(gumbel_softmax(alpha, g, -1.0), ConfigError);
}

TEST_CASE("gumbel_softmax gradcheck at both precisions") {
    Rng rng(104);
    auto g = draw_gumbel(rng, 4);
    auto run = [&](auto tag, double eps, double tol, double tau) {
        using T = decltype(tag);
        std::vector<Tensor<T>> ins{Tensor<T>::vec({T(0.2), T(-0.4), T(0.9), T(0.0)}, true)};
        auto f = [g, tau](const std::vector<Tensor<T>>& in) {
            return gumbel_softmax(in[0], g, tau);
        };
        CHECK(gradcheck<T>(f, ins, eps) < tol);
    };
    run(double{}, 1e-5, 1e-5, 1.0);
    run(double{}, 1e-5, 1e-5, 0.3);
    run(float{}, 1e-2, 1e-3, 1.0);
}

TEST_CASE("straight_through: binary forward, relaxed backward") {
    Rng rng(105);
    TD alpha = TD::vec({0.4, -0.2, 0.7}, true);
    GumbelSample<double> s = gumbel_onehot(alpha, rng, 0.8);

    TD st = straight_through(s);
    int ones = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK((st.values()[i] == 0.0 || st.values()[i] == 1.0));
        if (st.values()[i] == 1.0) {
            ones++;
            CHECK(int(i) == s.index);
        }
    }
    CHECK(ones == 1);

    // argmax(forward) == argmax(relaxed)
    int rel_arg = 0;
    for (int i = 1; i < 3; ++i)
        if (s.relaxed.values()[std::size_t(i)] > s.relaxed.values()[std::size_t(rel_arg)]) rel_arg = i;
    CHECK(rel_arg == s.index);

    // gradient w.r.t. alpha equals the relaxed path's gradient (finite diff)
    std::vector<double> c{0.3, -1.1, 0.6};
    Tensor<double> loss = weighted_sum(st, c);
    backward(loss);
    std::vector<double> got = alpha.grad();

    std::vector<double> av(alpha.values());
    const double eps = 1e-6;
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> hi = av, lo = av;
        hi[j] += eps;
        lo[j] -= eps;
        auto rel_hi = gumbel_softmax_values(hi, s.g, s.tau);
        auto rel_lo = gumbel_softmax_values(lo, s.g, s.tau);
        double want = 0.0;
        for (std::size_t i = 0; i < 3; ++i) want += c[i] * (rel_hi[i] - rel_lo[i]) / (2 * eps);
        CHECK(got[j] == doctest::Approx(want).epsilon(1e-5));
    }
}

TEST_CASE("straight_through rejects mismatched provenance") {
    Rng rng(106);
    TD alpha = TD::vec({0.4, -0.2, 0.7});
    GumbelSample<double> s = gumbel_onehot(alpha, rng, 1.0);
    // fake a one-hot that disagrees with the relaxed argmax
    s.index = (s.index + 1) % 3;
    s.onehot.assign(3, 0);
    s.onehot[std::size_t(s.index)] = 1;
    CHECK_THROWS_AS(straight_through(s), InputError);
}

TEST_CASE("slice_out/in_channels prefix semantics") {
    Rng rng(107);
    TF w = random_tensor<float>({4, 3, 3, 3}, rng);

    TF full0 = slice_out_channels(w, 4);
    CHECK(rel_error_norm(full0.values(), w.values()) == 0.0);

    TF half = slice_out_channels(w, 2);
    REQUIRE(half.shape() == Shape{2, 3, 3, 3});
    for (int co = 0; co < 2; ++co)
        for (int ci = 0; ci < 3; ++ci)
            for (int u = 0; u < 3; ++u)
                for (int v = 0; v < 3; ++v) CHECK(half.at(co, ci, u, v) == w.at(co, ci, u, v));

    CHECK_THROWS_AS(slice_out_channels(w, 0), InputError);
    CHECK_THROWS_AS(slice_out_channels(w, 5), InputError);
    CHECK_THROWS_AS(slice_in_channels(w, 4), InputError);
}

TEST_CASE("sliced-weight convolution equals the channel prefix of the full one") {
    Rng rng(108);
    for (int rep = 0; rep < 5; ++rep) {
        TF x = random_tensor<float>({1, 3, 6, 6}, rng);
        TF w = random_tensor<float>({4, 3, 3, 3}, rng);
        const int c = 1 + rng.bounded(4);
        TF sliced = conv2d(x, slice_out_channels(w, c), 1, 1);
        TF full = conv2d(x, w, 1, 1);
        TF prefix = slice_dim1_range(full, 0, c);
        CHECK(rel_error_norm(sliced.values(), prefix.values()) == 0.0);
    }
}

TEST_CASE("slice gradients route back into the prefix only") {
    Rng rng(109);
    TF w = random_tensor<float>({4, 2, 1, 1}, rng, true);
    backward(sum(slice_out_channels(w, 2)));
    for (int co = 0; co < 4; ++co)
        for (int ci = 0; ci < 2; ++ci)
            CHECK(w.grad()[std::size_t(w.index(co, ci, 0, 0))] == (co < 2 ? 1.0f : 0.0f));
}

TEST_CASE("concat-then-conv equals sum of split convolutions") {
    Rng rng(110);
    // the worked example: splits (2,3), k=3, pad 1
    {
        TF x1 = random_tensor<float>({1, 2, 5, 5}, rng);
        TF x2 = random_tensor<float>({1, 3, 5, 5}, rng);
        TF w = random_tensor<float>({4, 5, 3, 3}, rng);
        TF cat = concat_channels<float>({x1, x2});
        TF want = conv2d(cat, w, 1, 1);
        auto blocks = concat_conv_to_sum(w, {2, 3});
        TF got = add(conv2d(x1, blocks[0], 1, 1), conv2d(x2, blocks[1], 1, 1));
        CHECK(rel_error_norm(got.values(), want.values()) < 1e-5);
    }
    // random geometry sweep: M in {1,2,3}, k in {1,3,5}, strides {1,2}
    for (int rep = 0; rep < 20; ++rep) {
        const int m = 1 + rng.bounded(3);
        const int k = 1 + 2 * rng.bounded(3);
        const int stride = 1 + rng.bounded(2);
        const int pad = k / 2;
        std::vector<int> splits;
        std::vector<TF> xs;
        int total = 0;
        for (int i = 0; i < m; ++i) {
            const int c = 1 + rng.bounded(3);
            splits.push_back(c);
            total += c;
            xs.push_back(random_tensor<float>({1, c, 6, 6}, rng));
        }
        TF w = random_tensor<float>({3, total, k, k}, rng);
        TF want = conv2d(concat_channels<float>(xs), w, stride, pad);
        auto blocks = concat_conv_to_sum(w, splits);
        TF got;
        for (int i = 0; i < m; ++i) {
            TF y = conv2d(xs[std::size_t(i)], blocks[std::size_t(i)], stride, pad);
            got = got.defined() ? add(got, y) : y;
        }
        REQUIRE(got.shape() == want.shape());
        CHECK(rel_error_norm(got.values(), want.values()) < 1e-5);
    }
}

TEST_CASE("concat_conv_to_sum degenerate and error cases") {
    Rng rng(111);
    TF w = random_tensor<float>({2, 3, 1, 1}, rng);
    auto one = concat_conv_to_sum(w, {3});
    REQUIRE(one.size() == 1);
    CHECK(rel_error_norm(one[0].values(), w.values()) == 0.0);
    CHECK_THROWS_AS(concat_conv_to_sum(w, {2, 2}), InputError);
    CHECK_THROWS_AS(concat_conv_to_sum(w, std::vector<int>{3, 0}), InputError);
}

TEST_CASE("compound_conv composes with channel slicing") {
    // Eq-style compounding on sliced banks equals the per-candidate sum on
    // the same slices.
    Rng rng(112);
    using namespace kernelreuse;
    UnifiedKernel<float> uk = make_unified_kernel<float>(6, 4, edge_candidates(), rng);
    TF x = random_tensor<float>({1, 3, 6, 6}, rng);  // 3 of 4 input channels active
    const int c_out = 4;
    std::vector<double> raw{0.2, -0.1, 0.4, 0.05};
    auto alpha = softmax(raw);
    std::vector<float> af(alpha.begin(), alpha.end());

    TF theta_s = slice_out_channels(slice_in_channels(uk.theta, 3), c_out);
    TF got = conv2d(x, compound_kernel(theta_s, uk.masks, TF::vec(std::move(af))), 1, 2);

    std::vector<double> want;
    for (std::size_t o = 0; o < uk.masks.size(); ++o) {
        std::vector<float> w = theta_s.values();
        for (std::int64_t p = 0; p < std::int64_t(c_out) * 3; ++p)
            for (int i = 0; i < 25; ++i)
                if (!uk.masks[o].on[std::size_t(i)]) w[std::size_t(p * 25 + i)] = 0.0f;
        TF y = conv2d(x, TF::from({c_out, 3, 5, 5}, std::move(w)), 1, 2);
        if (want.empty()) want.assign(y.values().size(), 0.0);
        for (std::size_t i = 0; i < want.size(); ++i) want[i] += alpha[o] * double(y.values()[i]);
    }
    CHECK(rel_error_norm(got.values(), want) < 1e-5);
}

TEST_CASE("expansion rates must give integer channels") {
    ExpansionRate half{1, 2};
    CHECK(half.apply(8) == 4);
    CHECK(ExpansionRate{3, 4}.apply(8) == 6);
    CHECK_THROWS_AS((ExpansionRate{3, 4}.apply(6)), ConfigError);
    CHECK(expansion_three().size() == 3);
    CHECK(expansion_two().size() == 2);
    CHECK(expansion_from_value(0.75).num == 3);
    CHECK_THROWS_AS(expansion_from_value(0.6), InputError);
}

TEST_CASE("temperature schedule") {
    CHECK(temperature(0, 100, 5.0, 0.1) == doctest::Approx(5.0));
    CHECK(temperature(100, 100, 5.0, 0.1) == doctest::Approx(0.1));
    double prev = temperature(0, 50, 5.0, 0.1);
    for (int s = 1; s <= 50; ++s) {
        double t = temperature(s, 50, 5.0, 0.1);
        CHECK(t <= prev);
        prev = t;
    }
    CHECK_THROWS_AS(temperature(0, 100, 0.1, 5.0), ConfigError);
    CHECK_THROWS_AS(temperature(-1, 100, 5.0, 0.1), ConfigError);
    CHECK_THROWS_AS(temperature(101, 100, 5.0, 0.1), ConfigError);
}

TEST_CASE("straight-through is exactly one-hot over many samples") {
    Rng rng(113);
    TD alpha = TD::vec({0.3, 0.1, -0.2}, true);
    for (int rep = 0; rep < 50; ++rep) {
        GumbelSample<double> s = gumbel_onehot(alpha, rng, 0.5);
        TD st = straight_through(s);
        double total = 0.0;
        for (double v : st.values()) {
            total += v;
            CHECK((v == 0.0 || v == 1.0));
        }
        CHECK(total == 1.0);
    }
}
