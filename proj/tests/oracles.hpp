#pragma once

// Brute-force reference implementations used as independent oracles. These
// deliberately use the most literal loop structure (one accumulator per
// output element) and share no code with the engine.

#include <algorithm>
#include <cmath>
#include <vector>

#include "diffcore/rng.hpp"
#include "diffcore/tensor.hpp"

namespace oracles {

template <typename T>
diffcore::Tensor<T> random_tensor(diffcore::Shape s, diffcore::Rng& rng, bool requires_grad = false,
                                  double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(std::size_t(s.numel()));
    for (T& x : v) x = T(rng.uniform(lo, hi));
    return diffcore::Tensor<T>::from(s, std::move(v), requires_grad);
}

// Direct cross-correlation, one nested loop per output element.
template <typename T>
std::vector<double> conv2d_ref(const diffcore::Tensor<T>& x, const diffcore::Tensor<T>& w,
                               const std::vector<double>& bias, int stride, int padding,
                               int dilation = 1) {
    const auto& sx = x.shape();
    const auto& sw = w.shape();
    const int ho = (sx.h + 2 * padding - dilation * (sw.h - 1) - 1) / stride + 1;
    const int wo = (sx.w + 2 * padding - dilation * (sw.w - 1) - 1) / stride + 1;
    std::vector<double> out(std::size_t(sx.n) * sw.n * ho * wo);
    std::size_t o = 0;
    for (int n = 0; n < sx.n; ++n)
        for (int co = 0; co < sw.n; ++co)
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    double acc = bias.empty() ? 0.0 : bias[std::size_t(co)];
                    for (int ci = 0; ci < sx.c; ++ci)
                        for (int u = 0; u < sw.h; ++u)
                            for (int v = 0; v < sw.w; ++v) {
                                const int ih = oh * stride + u * dilation - padding;
                                const int iw = ow * stride + v * dilation - padding;
                                if (ih < 0 || ih >= sx.h || iw < 0 || iw >= sx.w) continue;
                                acc += double(x.at(n, ci, ih, iw)) * double(w.at(co, ci, u, v));
                            }
                    out[o++] = acc;
                }
    return out;
}

template <typename T>
std::vector<double> maxpool2d_ref(const diffcore::Tensor<T>& x, int k, int stride, int padding) {
    const auto& sx = x.shape();
    const int ho = (sx.h + 2 * padding - k) / stride + 1;
    const int wo = (sx.w + 2 * padding - k) / stride + 1;
    std::vector<double> out;
    for (int n = 0; n < sx.n; ++n)
        for (int c = 0; c < sx.c; ++c)
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    double best = -1e300;
                    for (int u = 0; u < k; ++u)
                        for (int v = 0; v < k; ++v) {
                            const int ih = oh * stride + u - padding;
                            const int iw = ow * stride + v - padding;
                            if (ih < 0 || ih >= sx.h || iw < 0 || iw >= sx.w) continue;
                            best = std::max(best, double(x.at(n, c, ih, iw)));
                        }
                    out.push_back(best);
                }
    return out;
}

template <typename T>
double max_rel_diff(const std::vector<T>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double g = double(got[i]);
        const double rel = std::abs(g - want[i]) / std::max({std::abs(g), std::abs(want[i]), 1e-8});
        worst = std::max(worst, rel);
    }
    return worst;
}

template <typename T>
double max_rel_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = double(a[i]), y = double(b[i]);
        const double rel = std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-8});
        worst = std::max(worst, rel);
    }
    return worst;
}

// inf-norm relative error: max|a-b| / max(max|a|, max|b|, 1e-8). The right
// metric for "two float computations of the same tensor agree": per-element
// ratios blow up on elements that cancel to ~0.
template <typename A, typename B>
double rel_error_norm(const std::vector<A>& a, const std::vector<B>& b) {
    double diff = 0.0, scale = 1e-8;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(double(a[i]) - double(b[i])));
        scale = std::max({scale, std::abs(double(a[i])), std::abs(double(b[i]))});
    }
    return diff / scale;
}

}  // namespace oracles
