#pragma once

#include <cmath>
#include <vector>

#include "diffcore/ops.hpp"
#include "diffcore/rng.hpp"
#include "diffcore/tensor.hpp"

namespace chansearch {

// One categorical draw: the hard one-hot used on the forward pass, the
// relaxed vector used for gradients, and the noise both were built from.
template <typename T>
struct GumbelSample {
    std::vector<int> onehot;
    int index = -1;
    diffcore::Tensor<T> relaxed;  // graph tensor when alpha required grad
    std::vector<double> g;
    double tau = 1.0;
};

// argmax_i(log softmax(alpha)_i + g_i) for externally supplied noise; the
// test hook for forcing g = 0.
inline int gumbel_argmax(const std::vector<double>& alpha, const std::vector<double>& g) {
    if (alpha.empty()) throw diffcore::InputError("gumbel_argmax: empty alpha");
    if (g.size() != alpha.size())
        throw diffcore::InputError("gumbel_argmax: noise length mismatch");
    std::vector<double> p = diffcore::softmax(alpha);
    int best = 0;
    double best_v = std::log(p[0]) + g[0];
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double v = std::log(p[i]) + g[i];
        if (v > best_v) {
            best_v = v;
            best = int(i);
        }
    }
    return best;
}

inline std::vector<double> draw_gumbel(diffcore::Rng& rng, std::size_t n) {
    std::vector<double> g(n);
    for (double& v : g) v = rng.gumbel();
    return g;
}

// Relaxed vector of Eq-style Gumbel-softmax:
//   E~_i = exp((log softmax(alpha)_i + g_i)/tau) / sum_j exp(...)
// computed with max-subtraction. Differentiable in alpha; g and tau are data.
template <typename T>
diffcore::Tensor<T> gumbel_softmax(const diffcore::Tensor<T>& alpha,
                                   const std::vector<double>& g, double tau) {
    using namespace diffcore;
    if (tau <= 0.0) throw ConfigError("gumbel_softmax: tau must be positive");
    const std::size_t k = std::size_t(alpha.numel());
    if (k == 0) throw InputError("gumbel_softmax: empty alpha");
    if (g.size() != k) throw InputError("gumbel_softmax: noise length mismatch");

    std::vector<double> av(k);
    for (std::size_t i = 0; i < k; ++i) av[i] = double(alpha.values()[i]);
    std::vector<double> p = softmax(av);
    std::vector<double> logits(k);
    for (std::size_t i = 0; i < k; ++i) logits[i] = (std::log(p[i]) + g[i]) / tau;
    std::vector<double> e = softmax(logits);

    std::vector<T> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = T(e[i]);
    return make_result<T>(Shape{1, int(k), 1, 1}, std::move(out), "gumbel_softmax", {alpha},
                          [ai = alpha.impl(), p, e, tau, k](TensorImpl<T>& o) {
                              if (!ai->requires_grad) return;
                              ai->ensure_grad();
                              // dE~_i/dlog(p)_j = E~_i (δ_ij - E~_j)/tau,
                              // dlog(p)_j/dalpha_m = δ_jm - p_m
                              std::vector<double> dl(k);  // dL/dlog(p)_j
                              double dot = 0.0;
                              for (std::size_t i = 0; i < k; ++i) dot += double(o.grad[i]) * e[i];
                              for (std::size_t j = 0; j < k; ++j)
                                  dl[j] = e[j] * (double(o.grad[j]) - dot) / tau;
                              double sum_dl = 0.0;
                              for (double v : dl) sum_dl += v;
                              for (std::size_t m = 0; m < k; ++m)
                                  ai->grad[m] += T(dl[m] - p[m] * sum_dl);
                          });
}

// Plain-math version (no graph), used by oracles and finite differences.
inline std::vector<double> gumbel_softmax_values(const std::vector<double>& alpha,
                                                 const std::vector<double>& g, double tau) {
    if (tau <= 0.0) throw diffcore::ConfigError("gumbel_softmax_values: tau must be positive");
    if (alpha.size() != g.size())
        throw diffcore::InputError("gumbel_softmax_values: noise length mismatch");
    std::vector<double> p = diffcore::softmax(alpha);
    std::vector<double> logits(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) logits[i] = (std::log(p[i]) + g[i]) / tau;
    return diffcore::softmax(logits);
}

// Draws one sample: hard one-hot plus the relaxed tensor from the same noise.
template <typename T>
GumbelSample<T> gumbel_onehot(const diffcore::Tensor<T>& alpha, diffcore::Rng& rng, double tau) {
    const std::size_t k = std::size_t(alpha.numel());
    if (k == 0) throw diffcore::InputError("gumbel_onehot: empty alpha");
    GumbelSample<T> s;
    s.g = draw_gumbel(rng, k);
    s.tau = tau;
    std::vector<double> av(k);
    for (std::size_t i = 0; i < k; ++i) av[i] = double(alpha.values()[i]);
    s.index = gumbel_argmax(av, s.g);
    s.onehot.assign(k, 0);
    s.onehot[std::size_t(s.index)] = 1;
    s.relaxed = gumbel_softmax(alpha, s.g, tau);
    return s;
}

// Forward is exactly the one-hot; the gradient is the relaxed path's
// (out = E~ + stopgrad(E - E~)). Rejects samples whose hard and relaxed
// parts disagree, which would mean they came from different noise.
template <typename T>
diffcore::Tensor<T> straight_through(const GumbelSample<T>& sample) {
    using namespace diffcore;
    const std::size_t k = sample.onehot.size();
    if (!sample.relaxed.defined() || std::size_t(sample.relaxed.numel()) != k)
        throw InputError("straight_through: relaxed vector missing or mis-sized");
    int relaxed_argmax = 0;
    for (std::size_t i = 1; i < k; ++i)
        if (sample.relaxed.values()[i] > sample.relaxed.values()[std::size_t(relaxed_argmax)])
            relaxed_argmax = int(i);
    if (sample.index < 0 || std::size_t(sample.index) >= k ||
        sample.onehot[std::size_t(sample.index)] != 1 || relaxed_argmax != sample.index)
        throw InputError("straight_through: one-hot and relaxed vector disagree");

    std::vector<T> out(k, T(0));
    out[std::size_t(sample.index)] = T(1);
    return make_result<T>(Shape{1, int(k), 1, 1}, std::move(out), "straight_through",
                          {sample.relaxed},
                          [ri = sample.relaxed.impl()](TensorImpl<T>& o) {
                              if (!ri->requires_grad) return;
                              ri->ensure_grad();
                              for (std::size_t i = 0; i < o.grad.size(); ++i)
                                  ri->grad[i] += o.grad[i];
                          });
}

}  // namespace chansearch
