#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "diffcore/tensor.hpp"

namespace diffcore {

inline int conv_out_dim(int in, int k, int stride, int padding, int dilation) {
    return (in + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
}

// 2-D cross-correlation (no kernel flip), NCHW. Weight is (C_out,C_in,kh,kw),
// bias an optional (1,C_out,1,1) tensor added once per output channel.
// Accumulation runs in double so algebraically equal formulations
// (compounded vs separate kernels, concat vs sum) agree to ~1e-7 at float32.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int stride, int padding, int dilation = 1) {
    const Shape& sx = x.shape();
    const Shape& sw = w.shape();
    if (stride < 1 || padding < 0 || dilation < 1)
        throw ConfigError("conv2d: bad stride/padding/dilation");
    if (sx.c != sw.c)
        throw InputError("conv2d: input channels " + std::to_string(sx.c) +
                         " != kernel channels " + std::to_string(sw.c));
    if (bias.defined() && !(bias.shape() == Shape{1, sw.n, 1, 1}))
        throw InputError("conv2d: bias shape " + bias.shape().str());
    const int kh = sw.h, kw = sw.w;
    const int ho = conv_out_dim(sx.h, kh, stride, padding, dilation);
    const int wo = conv_out_dim(sx.w, kw, stride, padding, dilation);
    if (ho < 1 || wo < 1)
        throw ConfigError("conv2d: non-positive output size for input " + sx.str());

    Shape so{sx.n, sw.n, ho, wo};
    std::vector<T> out(std::size_t(so.numel()));
    std::vector<double> acc(std::size_t(ho) * wo);
    for (int n = 0; n < sx.n; ++n)
        for (int co = 0; co < sw.n; ++co) {
            double b = bias.defined() ? double(bias.values()[std::size_t(co)]) : 0.0;
            std::fill(acc.begin(), acc.end(), b);
            for (int ci = 0; ci < sx.c; ++ci) {
                const T* xc = x.values().data() + (std::int64_t(n) * sx.c + ci) * sx.h * sx.w;
                const T* wc = w.values().data() + (std::int64_t(co) * sw.c + ci) * kh * kw;
                for (int u = 0; u < kh; ++u)
                    for (int v = 0; v < kw; ++v) {
                        const double wv = double(wc[u * kw + v]);
                        const int ih0 = u * dilation - padding;
                        const int iw0 = v * dilation - padding;
                        const int ow_lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                        const int ow_hi = std::min(wo - 1, (sx.w - 1 - iw0) / stride);
                        for (int oh = 0; oh < ho; ++oh) {
                            const int ih = oh * stride + ih0;
                            if (ih < 0 || ih >= sx.h) continue;
                            const T* xrow = xc + std::int64_t(ih) * sx.w;
                            double* arow = acc.data() + std::int64_t(oh) * wo;
                            for (int ow = ow_lo; ow <= ow_hi; ++ow)
                                arow[ow] += wv * double(xrow[ow * stride + iw0]);
                        }
                    }
            }
            T* dst = out.data() + (std::int64_t(n) * sw.n + co) * ho * wo;
            for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = T(acc[i]);
        }

    auto bw = [xi = x.impl(), wi = w.impl(),
               bi = bias.defined() ? bias.impl() : std::shared_ptr<TensorImpl<T>>(),
               stride, padding, dilation](TensorImpl<T>& o) {
        const Shape& sx = xi->shape;
        const Shape& sw = wi->shape;
        const Shape& so = o.shape;
        const int kh = sw.h, kw = sw.w, ho = so.h, wo = so.w;
        if (xi->requires_grad) {
            std::vector<double> gx(std::size_t(sx.c) * sx.h * sx.w);
            xi->ensure_grad();
            for (int n = 0; n < sx.n; ++n) {
                std::fill(gx.begin(), gx.end(), 0.0);
                for (int co = 0; co < sw.n; ++co) {
                    const T* go = o.grad.data() + (std::int64_t(n) * sw.n + co) * ho * wo;
                    for (int ci = 0; ci < sx.c; ++ci) {
                        const T* wc = wi->values.data() + (std::int64_t(co) * sw.c + ci) * kh * kw;
                        double* gc = gx.data() + std::int64_t(ci) * sx.h * sx.w;
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                const double wv = double(wc[u * kw + v]);
                                const int ih0 = u * dilation - padding;
                                const int iw0 = v * dilation - padding;
                                const int ow_lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                                const int ow_hi = std::min(wo - 1, (sx.w - 1 - iw0) / stride);
                                for (int oh = 0; oh < ho; ++oh) {
                                    const int ih = oh * stride + ih0;
                                    if (ih < 0 || ih >= sx.h) continue;
                                    double* grow = gc + std::int64_t(ih) * sx.w;
                                    const T* gorow = go + std::int64_t(oh) * wo;
                                    for (int ow = ow_lo; ow <= ow_hi; ++ow)
                                        grow[ow * stride + iw0] += wv * double(gorow[ow]);
                                }
                            }
                    }
                }
                T* dst = xi->grad.data() + std::int64_t(n) * sx.c * sx.h * sx.w;
                for (std::size_t i = 0; i < gx.size(); ++i) dst[i] += T(gx[i]);
            }
        }
        if (wi->requires_grad) {
            wi->ensure_grad();
            std::vector<double> gw(wi->values.size());
            for (int n = 0; n < sx.n; ++n)
                for (int co = 0; co < sw.n; ++co) {
                    const T* go = o.grad.data() + (std::int64_t(n) * sw.n + co) * ho * wo;
                    for (int ci = 0; ci < sx.c; ++ci) {
                        const T* xc = xi->values.data() + (std::int64_t(n) * sx.c + ci) * sx.h * sx.w;
                        double* gwc = gw.data() + (std::int64_t(co) * sw.c + ci) * kh * kw;
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                const int ih0 = u * dilation - padding;
                                const int iw0 = v * dilation - padding;
                                const int ow_lo = iw0 < 0 ? (-iw0 + stride - 1) / stride : 0;
                                const int ow_hi = std::min(wo - 1, (sx.w - 1 - iw0) / stride);
                                double s = 0.0;
                                for (int oh = 0; oh < ho; ++oh) {
                                    const int ih = oh * stride + ih0;
                                    if (ih < 0 || ih >= sx.h) continue;
                                    const T* xrow = xc + std::int64_t(ih) * sx.w;
                                    const T* gorow = go + std::int64_t(oh) * wo;
                                    for (int ow = ow_lo; ow <= ow_hi; ++ow)
                                        s += double(gorow[ow]) * double(xrow[ow * stride + iw0]);
                                }
                                gwc[u * kw + v] += s;
                            }
                    }
                }
            for (std::size_t i = 0; i < gw.size(); ++i) wi->grad[i] += T(gw[i]);
        }
        if (bi && bi->requires_grad) {
            bi->ensure_grad();
            for (int co = 0; co < sw.n; ++co) {
                double s = 0.0;
                for (int n = 0; n < sx.n; ++n) {
                    const T* go = o.grad.data() + (std::int64_t(n) * sw.n + co) * ho * wo;
                    for (std::int64_t i = 0; i < std::int64_t(ho) * wo; ++i) s += double(go[i]);
                }
                bi->grad[std::size_t(co)] += T(s);
            }
        }
    };
    if (bias.defined())
        return make_result<T>(so, std::move(out), "conv2d", {x, w, bias}, bw);
    return make_result<T>(so, std::move(out), "conv2d", {x, w}, bw);
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int padding,
                 int dilation = 1) {
    return conv2d(x, w, Tensor<T>(), stride, padding, dilation);
}

// Windowed max. Padded positions are ignored rather than treated as zero, so
// a constant input stays constant. Backward routes to the first maximum in
// row-major scan order.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, int k, int stride, int padding) {
    const Shape& sx = x.shape();
    if (k < 1 || stride < 1 || padding < 0 || padding > (k - 1) / 2)
        throw ConfigError("maxpool2d: bad geometry k=" + std::to_string(k) +
                          " stride=" + std::to_string(stride) +
                          " padding=" + std::to_string(padding));
    const int ho = conv_out_dim(sx.h, k, stride, padding, 1);
    const int wo = conv_out_dim(sx.w, k, stride, padding, 1);
    if (ho < 1 || wo < 1)
        throw ConfigError("maxpool2d: non-positive output size for input " + sx.str());

    Shape so{sx.n, sx.c, ho, wo};
    std::vector<T> out(std::size_t(so.numel()));
    auto argmax = std::make_shared<std::vector<std::int32_t>>(out.size());
    for (int n = 0; n < sx.n; ++n)
        for (int c = 0; c < sx.c; ++c) {
            const T* src = x.values().data() + (std::int64_t(n) * sx.c + c) * sx.h * sx.w;
            T* dst = out.data() + (std::int64_t(n) * sx.c + c) * ho * wo;
            std::int32_t* am = argmax->data() + (std::int64_t(n) * sx.c + c) * ho * wo;
            for (int oh = 0; oh < ho; ++oh)
                for (int ow = 0; ow < wo; ++ow) {
                    T best{};
                    std::int32_t best_idx = -1;
                    for (int u = 0; u < k; ++u) {
                        const int ih = oh * stride + u - padding;
                        if (ih < 0 || ih >= sx.h) continue;
                        for (int v = 0; v < k; ++v) {
                            const int iw = ow * stride + v - padding;
                            if (iw < 0 || iw >= sx.w) continue;
                            const T val = src[std::int64_t(ih) * sx.w + iw];
                            if (best_idx < 0 || val > best) {
                                best = val;
                                best_idx = std::int32_t(ih * sx.w + iw);
                            }
                        }
                    }
                    dst[std::int64_t(oh) * wo + ow] = best;
                    am[std::int64_t(oh) * wo + ow] = best_idx;
                }
        }
    return make_result<T>(so, std::move(out), "maxpool2d", {x},
                          [xi = x.impl(), argmax](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              const Shape& sx = xi->shape;
                              const Shape& so = o.shape;
                              const std::int64_t in_plane = std::int64_t(sx.h) * sx.w;
                              const std::int64_t out_plane = std::int64_t(so.h) * so.w;
                              for (int n = 0; n < sx.n; ++n)
                                  for (int c = 0; c < sx.c; ++c) {
                                      const std::int64_t base = (std::int64_t(n) * sx.c + c);
                                      const T* go = o.grad.data() + base * out_plane;
                                      const std::int32_t* am = argmax->data() + base * out_plane;
                                      T* gx = xi->grad.data() + base * in_plane;
                                      for (std::int64_t i = 0; i < out_plane; ++i)
                                          if (am[i] >= 0) gx[std::size_t(am[i])] += go[i];
                                  }
                          });
}

}  // namespace diffcore
