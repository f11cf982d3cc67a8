#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "diffcore/conv.hpp"
#include "diffcore/gradcheck.hpp"
#include "diffcore/ops.hpp"
#include "diffcore/rng.hpp"
#include "diffcore/tensor.hpp"
#include "oracles.hpp"

using namespace diffcore;
using oracles::max_rel_diff;
using oracles::random_tensor;

using TF = Tensor<float>;
using TD = Tensor<double>;

TEST_CASE("conv2d all-ones 3x3 kernel counts the overlap") {
    TF x = TF::full({1, 1, 3, 3}, 1.0f);
    TF w = TF::full({1, 1, 3, 3}, 1.0f);
    TF y = conv2d(x, w, 1, 1);
    REQUIRE(y.shape() == Shape{1, 1, 3, 3});
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(9.0));
    for (int r : {0, 2})
        for (int c : {0, 2}) CHECK(y.at(0, 0, r, c) == doctest::Approx(4.0));
    CHECK(y.at(0, 0, 0, 1) == doctest::Approx(6.0));
    CHECK(y.at(0, 0, 1, 0) == doctest::Approx(6.0));
    CHECK(y.at(0, 0, 1, 2) == doctest::Approx(6.0));
    CHECK(y.at(0, 0, 2, 1) == doctest::Approx(6.0));
}

TEST_CASE("conv2d delta kernel is the identity") {
    Rng rng(11);
    TF x = random_tensor<float>({1, 2, 5, 5}, rng);
    std::vector<float> w(std::size_t(2) * 2 * 3 * 3, 0.0f);
    // identity channel map: w[c][c] has a single 1 at the spatial center
    for (int c = 0; c < 2; ++c) w[std::size_t((c * 2 + c) * 9 + 4)] = 1.0f;
    TF y = conv2d(x, TF::from({2, 2, 3, 3}, w), 1, 1);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.values().size(); ++i)
        CHECK(y.values()[i] == doctest::Approx(x.values()[i]));
}

TEST_CASE("conv2d matches the brute-force oracle (stride 2, pad 1)") {
    Rng rng(7);
    TF x = random_tensor<float>({2, 3, 8, 8}, rng);
    TF w = random_tensor<float>({4, 3, 3, 3}, rng);
    TF y = conv2d(x, w, 2, 1);
    auto want = oracles::conv2d_ref(x, w, {}, 2, 1);
    REQUIRE(y.values().size() == want.size());
    CHECK(max_rel_diff(y.values(), want) < 1e-5);
}

TEST_CASE("conv2d handles dilation and bias against the oracle") {
    Rng rng(8);
    TF x = random_tensor<float>({1, 2, 7, 7}, rng);
    TF w = random_tensor<float>({3, 2, 3, 3}, rng);
    TF b = random_tensor<float>({1, 3, 1, 1}, rng);
    TF y = conv2d(x, w, b, 1, 2, 2);
    std::vector<double> bias(b.values().begin(), b.values().end());
    auto want = oracles::conv2d_ref(x, w, bias, 1, 2, 2);
    CHECK(max_rel_diff(y.values(), want) < 1e-5);
}

TEST_CASE("conv2d rejects bad inputs") {
    TF x = TF::zeros({1, 2, 4, 4});
    TF w = TF::zeros({1, 3, 3, 3});
    CHECK_THROWS_AS(conv2d(x, w, 1, 1), InputError);
    TF w2 = TF::zeros({1, 2, 5, 5});
    CHECK_THROWS_AS(conv2d(x, w2, 1, 0), ConfigError);  // output would be 0x0
    CHECK_THROWS_AS(conv2d(x, w2, 0, 2), ConfigError);
}

TEST_CASE("conv2d linearity in the kernel") {
    Rng rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        TF x = random_tensor<float>({1, 2, 6, 6}, rng);
        TF w1 = random_tensor<float>({3, 2, 3, 3}, rng);
        TF w2 = random_tensor<float>({3, 2, 3, 3}, rng);
        const float a = float(rng.uniform(-2.0, 2.0));
        const float b = float(rng.uniform(-2.0, 2.0));
        std::vector<float> wm(w1.values().size());
        for (std::size_t i = 0; i < wm.size(); ++i)
            wm[i] = a * w1.values()[i] + b * w2.values()[i];
        TF lhs = conv2d(x, TF::from(w1.shape(), wm), 1, 1);
        TF y1 = conv2d(x, w1, 1, 1);
        TF y2 = conv2d(x, w2, 1, 1);
        std::vector<double> rhs(lhs.values().size());
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = double(a) * double(y1.values()[i]) + double(b) * double(y2.values()[i]);
        CHECK(oracles::rel_error_norm(lhs.values(), rhs) < 1e-5);
    }
}

TEST_CASE("conv2d is deterministic bit-for-bit") {
    Rng rng(10);
    TF x = random_tensor<float>({2, 3, 8, 8}, rng);
    TF w = random_tensor<float>({4, 3, 3, 3}, rng);
    TF y1 = conv2d(x, w, 1, 1);
    TF y2 = conv2d(x, w, 1, 1);
    CHECK(std::memcmp(y1.values().data(), y2.values().data(),
                      y1.values().size() * sizeof(float)) == 0);
}

TEST_CASE("concat_channels layout and identity") {
    Rng rng(12);
    TF a = random_tensor<float>({1, 2, 3, 3}, rng);
    TF b = random_tensor<float>({1, 3, 3, 3}, rng);

    TF single = concat_channels<float>({a});
    CHECK(max_rel_diff(single.values(), a.values()) == 0.0);

    TF y = concat_channels<float>({a, b});
    REQUIRE(y.shape() == Shape{1, 5, 3, 3});
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(y.at(0, c, i, j) == a.at(0, c, i, j));
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(y.at(0, 2 + c, i, j) == b.at(0, c, i, j));

    TF bad = random_tensor<float>({1, 1, 4, 3}, rng);
    CHECK_THROWS_AS(concat_channels<float>({a, bad}), InputError);
}

TEST_CASE("concat_channels backward splits the gradient") {
    Rng rng(13);
    TF a = random_tensor<float>({1, 2, 2, 2}, rng, true);
    TF b = random_tensor<float>({1, 3, 2, 2}, rng, true);
    TF loss = sum(concat_channels<float>({a, b}));
    backward(loss);
    for (float g : a.grad()) CHECK(g == doctest::Approx(1.0));
    for (float g : b.grad()) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("upsample_nearest2x copies and sums gradients") {
    TF x = TF::full({1, 1, 1, 1}, 7.0f, true);
    TF y = upsample_nearest2x(x);
    REQUIRE(y.shape() == Shape{1, 1, 2, 2});
    for (float v : y.values()) CHECK(v == doctest::Approx(7.0));
    backward(sum(y));
    CHECK(x.grad()[0] == doctest::Approx(4.0));

    Rng rng(14);
    TF z = random_tensor<float>({1, 2, 3, 3}, rng);
    TF u = upsample_nearest2x(z);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(u.at(0, c, i, j) == z.at(0, c, i / 2, j / 2));
}

TEST_CASE("maxpool2d basics and oracle") {
    TF c = TF::full({1, 2, 6, 6}, 3.5f);
    TF yc = maxpool2d(c, 5, 1, 2);
    for (float v : yc.values()) CHECK(v == doctest::Approx(3.5));

    Rng rng(15);
    TF x = random_tensor<float>({1, 1, 6, 6}, rng);
    TF ident = maxpool2d(x, 1, 1, 0);
    CHECK(max_rel_diff(ident.values(), x.values()) == 0.0);

    TF y = maxpool2d(x, 5, 1, 2);
    auto want = oracles::maxpool2d_ref(x, 5, 1, 2);
    REQUIRE(y.values().size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(double(y.values()[i]) == doctest::Approx(want[i]));

    CHECK_THROWS_AS(maxpool2d(x, 3, 1, 2), ConfigError);
    CHECK_THROWS_AS(maxpool2d(x, 0, 1, 0), ConfigError);
}

TEST_CASE("maxpool2d gradient goes to the first argmax") {
    TF x = TF::from({1, 1, 2, 2}, {1.0f, 5.0f, 5.0f, 0.0f}, true);
    TF y = maxpool2d(x, 2, 1, 0);
    backward(sum(y));
    CHECK(x.grad()[1] == doctest::Approx(1.0));  // row-major scan hits (0,1) first
    CHECK(x.grad()[2] == doctest::Approx(0.0));
}

TEST_CASE("silu and softmax scalar facts") {
    TF x = TF::from({1, 3, 1, 1}, {0.0f, 1.0f, -1.0f});
    TF y = silu(x);
    CHECK(y.values()[0] == doctest::Approx(0.0));
    CHECK(y.values()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

    auto p = softmax({0.0, 0.0, 0.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));

    auto q = softmax({1000.0, 0.0});
    CHECK(q[0] == doctest::Approx(1.0));
    CHECK(q[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(q[0]));

    double s = 0.0;
    for (double v : softmax({3.7, -2.0, 0.4, 9.1})) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax({}), InputError);
}

TEST_CASE("softmax_channels matches the vector softmax and normalizes") {
    Rng rng(16);
    TF x = random_tensor<float>({1, 4, 1, 1}, rng, true);
    TF y = softmax_channels(x);
    std::vector<double> xs(x.values().begin(), x.values().end());
    auto want = softmax(xs);
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(double(y.values()[i]) == doctest::Approx(want[i]));
}

TEST_CASE("backward on linear functions") {
    Rng rng(17);
    TF x = random_tensor<float>({2, 2, 2, 2}, rng, true);
    backward(sum(x));
    for (float g : x.grad()) CHECK(g == doctest::Approx(1.0));

    x.zero_grad();
    backward(sum(scale(x, 2.0f)));
    for (float g : x.grad()) CHECK(g == doctest::Approx(2.0));
}

TEST_CASE("gradients accumulate across reuse of a tensor") {
    TF x = TF::full({1, 1, 1, 1}, 3.0f, true);
    TF y = add(x, x);
    backward(sum(y));
    CHECK(x.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("backward rejects non-scalar losses") {
    TF x = TF::zeros({1, 2, 1, 1}, true);
    CHECK_THROWS_AS(backward(add(x, x)), InputError);
}

TEST_CASE("gradcheck fundamentals") {
    Rng rng(18);
    // constant function: zero gradient, zero error
    auto constant = [](const std::vector<TD>& in) {
        (void)in;
        return TD::full({1, 1, 1, 1}, 4.0);
    };
    std::vector<TD> in0{random_tensor<double>({1, 2, 2, 2}, rng, true)};
    CHECK(gradcheck<double>(constant, in0, 1e-5) < 1e-9);

    // f(x) = sum(x^2): analytic 2x
    auto square = [](const std::vector<TD>& in) { return sum(mul(in[0], in[0])); };
    std::vector<TD> in1{random_tensor<double>({1, 2, 3, 3}, rng, true)};
    CHECK(gradcheck<double>(square, in1, 1e-6) < 1e-6);

    // stochastic functions are rejected
    auto noisy = [](const std::vector<TD>& in) {
        static int calls = 0;
        return scale(in[0], 1.0 + 0.5 * (calls++ % 2));
    };
    std::vector<TD> in2{random_tensor<double>({1, 1, 2, 2}, rng, true)};
    CHECK_THROWS_AS(gradcheck<double>(noisy, in2, 1e-6), InputError);
}

TEST_CASE("gradcheck: conv2d at both precisions") {
    Rng rng(19);
    auto make_case = [&](auto tag) {
        using T = decltype(tag);
        std::vector<Tensor<T>> ins{random_tensor<T>({2, 3, 6, 6}, rng, true),
                                   random_tensor<T>({4, 3, 3, 3}, rng, true),
                                   random_tensor<T>({1, 4, 1, 1}, rng, true)};
        auto f = [](const std::vector<Tensor<T>>& in) {
            return conv2d(in[0], in[1], in[2], 2, 1, 1);
        };
        return std::pair(f, ins);
    };
    // conv is multilinear in each input, so central differences carry no
    // truncation error; a large eps just drowns the float32 roundoff.
    auto [ff, fin] = make_case(float{});
    CHECK(gradcheck<float>(ff, fin, 0.1) < 1e-3);
    auto [fd, din] = make_case(double{});
    CHECK(gradcheck<double>(fd, din, 1e-5) < 1e-5);
}

TEST_CASE("gradcheck sweep over the remaining ops (64-bit)") {
    Rng rng(20);
    auto check = [&](auto f, std::vector<TD> ins, double tol = 1e-6) {
        CHECK(gradcheck<double>(f, std::move(ins), 1e-5) < tol);
    };

    check([](const std::vector<TD>& in) { return add(in[0], in[1]); },
          {random_tensor<double>({2, 4, 8, 8}, rng, true),
           random_tensor<double>({2, 4, 8, 8}, rng, true)});
    check([](const std::vector<TD>& in) { return add_widen(in[0], in[1]); },
          {random_tensor<double>({1, 5, 4, 4}, rng, true),
           random_tensor<double>({1, 2, 4, 4}, rng, true)});
    check([](const std::vector<TD>& in) { return mul(in[0], in[1]); },
          {random_tensor<double>({1, 3, 4, 4}, rng, true),
           random_tensor<double>({1, 3, 4, 4}, rng, true)});
    check([](const std::vector<TD>& in) { return scale(in[0], -1.7); },
          {random_tensor<double>({1, 2, 3, 3}, rng, true)});
    check([](const std::vector<TD>& in) { return scale_by(in[0], in[1]); },
          {random_tensor<double>({1, 2, 3, 3}, rng, true),
           random_tensor<double>({1, 1, 1, 1}, rng, true)});
    check([](const std::vector<TD>& in) { return select_component(in[0], 2); },
          {random_tensor<double>({1, 4, 1, 1}, rng, true)});
    check([](const std::vector<TD>& in) { return silu(in[0]); },
          {random_tensor<double>({2, 2, 4, 4}, rng, true)});
    check([](const std::vector<TD>& in) { return softmax_channels(in[0]); },
          {random_tensor<double>({1, 5, 1, 1}, rng, true)});
    check([](const std::vector<TD>& in) { return concat_channels<double>({in[0], in[1]}); },
          {random_tensor<double>({1, 2, 3, 3}, rng, true),
           random_tensor<double>({1, 3, 3, 3}, rng, true)});
    check([](const std::vector<TD>& in) { return upsample_nearest2x(in[0]); },
          {random_tensor<double>({1, 2, 3, 3}, rng, true)});
    check([](const std::vector<TD>& in) { return space_to_depth2(in[0]); },
          {random_tensor<double>({1, 3, 4, 4}, rng, true)});
    check([](const std::vector<TD>& in) { return slice_dim0_prefix(in[0], 2); },
          {random_tensor<double>({4, 2, 3, 3}, rng, true)});
    check([](const std::vector<TD>& in) { return slice_dim1_range(in[0], 1, 2); },
          {random_tensor<double>({2, 4, 3, 3}, rng, true)});
    check([](const std::vector<TD>& in) { return maxpool2d(in[0], 3, 1, 1); },
          {random_tensor<double>({1, 2, 6, 6}, rng, true)});
    check([](const std::vector<TD>& in) { return sum(in[0]); },
          {random_tensor<double>({2, 4, 8, 8}, rng, true)});
}

TEST_CASE("space_to_depth2 halves the grid and rejects odd sizes") {
    Rng rng(21);
    TF x = random_tensor<float>({1, 3, 4, 6}, rng);
    TF y = space_to_depth2(x);
    REQUIRE(y.shape() == Shape{1, 12, 2, 3});
    // block 0 = even rows, even cols; block 1 = odd rows, even cols
    CHECK(y.at(0, 0, 0, 0) == x.at(0, 0, 0, 0));
    CHECK(y.at(0, 3, 1, 1) == x.at(0, 0, 3, 2));
    CHECK(y.at(0, 6, 0, 1) == x.at(0, 0, 0, 3));
    CHECK(y.at(0, 9, 0, 0) == x.at(0, 0, 1, 1));
    CHECK_THROWS_AS(space_to_depth2(random_tensor<float>({1, 1, 3, 4}, rng)), InputError);
}
