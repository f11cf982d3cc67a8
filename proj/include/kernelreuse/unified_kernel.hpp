#pragma once

#include <cmath>
#include <vector>

#include "diffcore/conv.hpp"
#include "diffcore/ops.hpp"
#include "diffcore/rng.hpp"
#include "diffcore/tensor.hpp"
#include "kernelreuse/candidates.hpp"

namespace kernelreuse {

// One shared 5x5 weight bank per super-edge. Each candidate convolution is a
// binary-masked view of the bank, so the alpha-weighted mixture of all
// candidates collapses into a single convolution. Overlapping masks share
// taps: there are no per-candidate private copies.
template <typename T>
struct UnifiedKernel {
    diffcore::Tensor<T> theta;  // (C_out, C_in, 5, 5)
    diffcore::Tensor<T> bias;   // (1, C_out, 1, 1); undefined when bias-free
    std::vector<CandidateOp> candidates;
    std::vector<Mask> masks;  // aligned with candidates

    int c_out() const { return theta.shape().n; }
    int c_in() const { return theta.shape().c; }
};

template <typename T>
UnifiedKernel<T> make_unified_kernel(int c_out, int c_in,
                                     std::vector<CandidateOp> candidates,
                                     diffcore::Rng& rng, bool with_bias = true) {
    if (c_out < 1 || c_in < 1)
        throw diffcore::ConfigError("make_unified_kernel: bad channel counts");
    UnifiedKernel<T> uk;
    uk.candidates = std::move(candidates);
    for (const auto& op : uk.candidates) uk.masks.push_back(build_mask(op));

    // Fan-in scaling sized for the typical active slice: the 3x3 candidate
    // footprint rather than the full 5x5 bank, and 3/4 of the stored input
    // channels (the mean expansion rate). Gain 2 against silu's slope-1/2
    // small-signal regime; there is no normalization layer to rescue a
    // decaying signal.
    const double std_dev = 2.0 / std::sqrt(double(c_in) * 9.0 * 0.75);
    std::vector<T> w(std::size_t(c_out) * c_in * kBankSize * kBankSize);
    for (T& v : w) v = T(rng.gaussian() * std_dev);
    uk.theta = diffcore::Tensor<T>::from({c_out, c_in, kBankSize, kBankSize}, std::move(w), true);
    if (with_bias)
        uk.bias = diffcore::Tensor<T>::zeros({1, c_out, 1, 1}, true);
    return uk;
}

// theta ⊙ (sum_o alpha_o * M_o), differentiable in theta and alpha. alpha is
// passed through unnormalized; callers softmax it first.
template <typename T>
diffcore::Tensor<T> compound_kernel(const diffcore::Tensor<T>& theta,
                                    const std::vector<Mask>& masks,
                                    const diffcore::Tensor<T>& alpha) {
    using namespace diffcore;
    const Shape& st = theta.shape();
    if (st.h != kBankSize || st.w != kBankSize)
        throw InputError("compound_kernel: theta must be 5x5, got " + st.str());
    if (alpha.numel() != std::int64_t(masks.size()))
        throw InputError("compound_kernel: alpha length " + std::to_string(alpha.numel()) +
                         " != candidate count " + std::to_string(masks.size()));

    std::array<double, kBankSize * kBankSize> coef{};
    for (std::size_t o = 0; o < masks.size(); ++o) {
        const double a = double(alpha.values()[o]);
        for (int i = 0; i < kBankSize * kBankSize; ++i)
            if (masks[o].on[std::size_t(i)]) coef[std::size_t(i)] += a;
    }

    std::vector<T> out(theta.values().size());
    const std::int64_t planes = std::int64_t(st.n) * st.c;
    for (std::int64_t p = 0; p < planes; ++p)
        for (int i = 0; i < kBankSize * kBankSize; ++i) {
            const std::size_t idx = std::size_t(p * kBankSize * kBankSize + i);
            out[idx] = T(double(theta.values()[idx]) * coef[std::size_t(i)]);
        }

    return make_result<T>(st, std::move(out), "compound_kernel", {theta, alpha},
                          [ti = theta.impl(), ai = alpha.impl(), masks, coef](TensorImpl<T>& o) {
                              const Shape& st = ti->shape;
                              const std::int64_t planes = std::int64_t(st.n) * st.c;
                              if (ti->requires_grad) {
                                  ti->ensure_grad();
                                  for (std::int64_t p = 0; p < planes; ++p)
                                      for (int i = 0; i < kBankSize * kBankSize; ++i) {
                                          const std::size_t idx = std::size_t(p * kBankSize * kBankSize + i);
                                          ti->grad[idx] += T(double(o.grad[idx]) * coef[std::size_t(i)]);
                                      }
                              }
                              if (ai->requires_grad) {
                                  ai->ensure_grad();
                                  for (std::size_t oidx = 0; oidx < masks.size(); ++oidx) {
                                      double acc = 0.0;
                                      for (std::int64_t p = 0; p < planes; ++p)
                                          for (int i = 0; i < kBankSize * kBankSize; ++i)
                                              if (masks[oidx].on[std::size_t(i)]) {
                                                  const std::size_t idx =
                                                      std::size_t(p * kBankSize * kBankSize + i);
                                                  acc += double(o.grad[idx]) * double(ti->values[idx]);
                                              }
                                      ai->grad[oidx] += T(acc);
                                  }
                              }
                          });
}

template <typename T>
diffcore::Tensor<T> compound_kernel(const UnifiedKernel<T>& uk, const diffcore::Tensor<T>& alpha) {
    return compound_kernel(uk.theta, uk.masks, alpha);
}

// The whole edge as one convolution: conv2d with the compounded kernel at
// padding 2 (the bank's native padding). Bias, when present, is added once;
// with softmax-normalized alpha that matches adding it to each candidate.
template <typename T>
diffcore::Tensor<T> compound_conv(const diffcore::Tensor<T>& x, const UnifiedKernel<T>& uk,
                                  const diffcore::Tensor<T>& alpha, int stride) {
    if (x.shape().c > uk.c_in())
        throw diffcore::InputError("compound_conv: input channels " +
                                   std::to_string(x.shape().c) + " exceed bank channels " +
                                   std::to_string(uk.c_in()));
    diffcore::Tensor<T> theta = uk.theta;
    diffcore::Tensor<T> bias = uk.bias;
    if (x.shape().c < uk.c_in())
        theta = diffcore::slice_dim1_range(theta, 0, x.shape().c);
    return diffcore::conv2d(x, compound_kernel(theta, uk.masks, alpha), bias, stride,
                            kBankSize / 2, 1);
}

// Native k x k kernel of one candidate, copied out of the masked bank. Used
// when a discovered architecture is materialized into a standalone network.
template <typename T>
diffcore::Tensor<T> extract_candidate_kernel(const UnifiedKernel<T>& uk, const CandidateOp& op,
                                             bool requires_grad = false) {
    using namespace diffcore;
    std::size_t idx = uk.candidates.size();
    for (std::size_t i = 0; i < uk.candidates.size(); ++i)
        if (uk.candidates[i] == op) idx = i;
    if (idx == uk.candidates.size())
        throw InputError(std::string("extract_candidate_kernel: op '") + op_name(op.kind) +
                         "' not on this edge");
    const Shape& st = uk.theta.shape();
    const int k = op.kernel;
    const int start = kBankSize / 2 - op.dilation * (k - 1) / 2;
    std::vector<T> out(std::size_t(st.n) * st.c * k * k);
    for (int co = 0; co < st.n; ++co)
        for (int ci = 0; ci < st.c; ++ci) {
            const T* src = uk.theta.values().data() +
                           (std::int64_t(co) * st.c + ci) * kBankSize * kBankSize;
            T* dst = out.data() + (std::int64_t(co) * st.c + ci) * k * k;
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c)
                    dst[r * k + c] = src[(start + r * op.dilation) * kBankSize +
                                         (start + c * op.dilation)];
        }
    return Tensor<T>::from({st.n, st.c, k, k}, std::move(out), requires_grad);
}

// Parameter count of one shared-bank super-edge vs four independent
// candidate convolutions (1 + 9 + 25 + 9 taps).
inline std::int64_t unified_edge_params(int c_in, int c_out, bool with_bias = true) {
    return std::int64_t(25) * c_in * c_out + (with_bias ? c_out : 0);
}

inline std::int64_t independent_edge_params(int c_in, int c_out, bool with_bias = true) {
    return std::int64_t(44) * c_in * c_out + (with_bias ? 4 * std::int64_t(c_out) : 0);
}

}  // namespace kernelreuse
