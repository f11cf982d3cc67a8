#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "diffcore/ops.hpp"
#include "search/data.hpp"

namespace search {

// Toy detection loss over the three prediction scales. Channel layout per
// cell: [objectness, n_classes class logits, 4 box terms].
//   - binary cross-entropy on objectness over every cell (probabilities
//     clamped to [1e-7, 1-1e-7]), mean over cells;
//   - squared error on the box terms at positive cells, mean;
//   - softmax cross-entropy on the class logits at positive cells, mean.
template <typename T>
diffcore::Tensor<T> detection_loss(const std::array<diffcore::Tensor<T>, supernet::kScales>& preds,
                                   const BatchTargets& targets, int n_classes) {
    using namespace diffcore;
    constexpr double kClamp = 1e-7;
    const int channels = 1 + n_classes + 4;
    for (const auto& p : preds) {
        if (!p.defined()) throw InputError("detection_loss: undefined prediction tensor");
        if (p.shape().c != channels)
            throw InputError("detection_loss: expected " + std::to_string(channels) +
                             " channels (1 obj + " + std::to_string(n_classes) + " cls + 4 box), got " +
                             std::to_string(p.shape().c));
    }

    // positive-cell lookup per scale: (n,gy,gx) -> target index
    std::array<std::unordered_map<std::int64_t, std::size_t>, supernet::kScales> pos;
    std::int64_t n_pos = 0;
    for (int s = 0; s < supernet::kScales; ++s) {
        const Shape& sh = preds[std::size_t(s)].shape();
        for (std::size_t t = 0; t < targets.cells[std::size_t(s)].size(); ++t) {
            const BatchCell& c = targets.cells[std::size_t(s)][t];
            if (c.n < 0 || c.n >= sh.n || c.gy < 0 || c.gy >= sh.h || c.gx < 0 || c.gx >= sh.w ||
                c.cls < 0 || c.cls >= n_classes)
                throw InputError("detection_loss: target cell out of range");
            pos[std::size_t(s)].emplace((std::int64_t(c.n) * sh.h + c.gy) * sh.w + c.gx, t);
        }
        n_pos += std::int64_t(pos[std::size_t(s)].size());
    }
    std::int64_t n_cells = 0;
    for (const auto& p : preds) n_cells += std::int64_t(p.shape().n) * p.shape().h * p.shape().w;

    auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

    double obj_sum = 0.0, box_sum = 0.0, cls_sum = 0.0;
    for (int s = 0; s < supernet::kScales; ++s) {
        const Tensor<T>& p = preds[std::size_t(s)];
        const Shape& sh = p.shape();
        const std::int64_t plane = std::int64_t(sh.h) * sh.w;
        for (int n = 0; n < sh.n; ++n)
            for (std::int64_t i = 0; i < plane; ++i) {
                const std::int64_t key = std::int64_t(n) * plane + i;
                auto it = pos[std::size_t(s)].find(key);
                const double z = double(p.values()[std::size_t(n * sh.c * plane + i)]);
                const double pr = std::clamp(sigmoid(z), kClamp, 1.0 - kClamp);
                if (it == pos[std::size_t(s)].end()) {
                    obj_sum -= std::log(1.0 - pr);
                    continue;
                }
                obj_sum -= std::log(pr);
                const BatchCell& tgt = targets.cells[std::size_t(s)][it->second];
                for (int k = 0; k < 4; ++k) {
                    const double d =
                        double(p.values()[std::size_t((n * sh.c + 1 + n_classes + k) * plane + i)]) -
                        double(tgt.box[std::size_t(k)]);
                    box_sum += d * d;
                }
                double mx = -1e300;
                for (int c = 0; c < n_classes; ++c)
                    mx = std::max(mx, double(p.values()[std::size_t((n * sh.c + 1 + c) * plane + i)]));
                double zsum = 0.0;
                for (int c = 0; c < n_classes; ++c)
                    zsum += std::exp(double(p.values()[std::size_t((n * sh.c + 1 + c) * plane + i)]) - mx);
                cls_sum -= double(p.values()[std::size_t((n * sh.c + 1 + tgt.cls) * plane + i)]) - mx -
                           std::log(zsum);
            }
    }
    const double loss = obj_sum / double(n_cells) + (n_pos > 0 ? box_sum / double(n_pos) : 0.0) +
                        (n_pos > 0 ? cls_sum / double(n_pos) : 0.0);

    std::vector<Tensor<T>> inputs(preds.begin(), preds.end());
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    for (const auto& p : preds) impls.push_back(p.impl());
    auto bw = [impls, targets, pos, n_classes, n_cells, n_pos, sigmoid](TensorImpl<T>& o) {
        const double go = double(o.grad[0]);
        constexpr double kC = 1e-7;
        for (int s = 0; s < supernet::kScales; ++s) {
            auto& pi = *impls[std::size_t(s)];
            if (!pi.requires_grad) continue;
            pi.ensure_grad();
            const Shape& sh = pi.shape;
            const std::int64_t plane = std::int64_t(sh.h) * sh.w;
            for (int n = 0; n < sh.n; ++n)
                for (std::int64_t i = 0; i < plane; ++i) {
                    const std::int64_t key = std::int64_t(n) * plane + i;
                    auto it = pos[std::size_t(s)].find(key);
                    const bool positive = it != pos[std::size_t(s)].end();
                    const double z = double(pi.values[std::size_t(n * sh.c * plane + i)]);
                    const double pr = sigmoid(z);
                    // clamped region is flat
                    if (pr > kC && pr < 1.0 - kC)
                        pi.grad[std::size_t(n * sh.c * plane + i)] +=
                            T(go * (pr - (positive ? 1.0 : 0.0)) / double(n_cells));
                    if (!positive) continue;
                    const BatchCell& tgt = targets.cells[std::size_t(s)][it->second];
                    for (int k = 0; k < 4; ++k) {
                        const std::size_t idx = std::size_t((n * sh.c + 1 + n_classes + k) * plane + i);
                        pi.grad[idx] += T(go * 2.0 *
                                          (double(pi.values[idx]) - double(tgt.box[std::size_t(k)])) /
                                          double(n_pos));
                    }
                    double mx = -1e300;
                    for (int c = 0; c < n_classes; ++c)
                        mx = std::max(mx, double(pi.values[std::size_t((n * sh.c + 1 + c) * plane + i)]));
                    double zsum = 0.0;
                    for (int c = 0; c < n_classes; ++c)
                        zsum += std::exp(double(pi.values[std::size_t((n * sh.c + 1 + c) * plane + i)]) - mx);
                    for (int c = 0; c < n_classes; ++c) {
                        const std::size_t idx = std::size_t((n * sh.c + 1 + c) * plane + i);
                        const double soft = std::exp(double(pi.values[idx]) - mx) / zsum;
                        pi.grad[idx] += T(go * (soft - (c == tgt.cls ? 1.0 : 0.0)) / double(n_pos));
                    }
                }
        }
    };
    return make_result<T>(Shape{1, 1, 1, 1}, {T(loss)}, "detection_loss", inputs, bw);
}

}  // namespace search
