#pragma once

#include <vector>

#include "diffcore/ops.hpp"
#include "diffcore/tensor.hpp"

namespace chansearch {

// Prefix slices over convolution weights: sampling expansion rate e on layer
// l keeps the first e*C_l filters, which also narrows the next layer's
// input channels. Gradients route back into the sliced region only.

template <typename T>
diffcore::Tensor<T> slice_out_channels(const diffcore::Tensor<T>& w, int c) {
    return diffcore::slice_dim0_prefix(w, c);
}

template <typename T>
diffcore::Tensor<T> slice_in_channels(const diffcore::Tensor<T>& w, int c) {
    return diffcore::slice_dim1_range(w, 0, c);
}

// Splits the weight of a conv-after-concat into per-input blocks:
//   conv2d(concat(X_1..X_M), w) == sum_m conv2d(X_m, block_m)
// for every stride/padding, which turns concat layers into sum layers and
// keeps each block prefix-sliceable on its own.
template <typename T>
std::vector<diffcore::Tensor<T>> concat_conv_to_sum(const diffcore::Tensor<T>& w,
                                                    const std::vector<int>& splits) {
    int total = 0;
    for (int s : splits) {
        if (s <= 0) throw diffcore::InputError("concat_conv_to_sum: non-positive split");
        total += s;
    }
    if (total != w.shape().c)
        throw diffcore::InputError("concat_conv_to_sum: splits sum to " + std::to_string(total) +
                                   ", weight has " + std::to_string(w.shape().c) +
                                   " input channels");
    std::vector<diffcore::Tensor<T>> blocks;
    int begin = 0;
    for (int s : splits) {
        blocks.push_back(diffcore::slice_dim1_range(w, begin, s));
        begin += s;
    }
    return blocks;
}

// Rational expansion rate. Candidates must land on whole channel counts;
// anything else is rejected at build time instead of silently rounded.
struct ExpansionRate {
    int num = 1, den = 1;

    double value() const { return double(num) / double(den); }
    bool divides(int base) const { return (std::int64_t(base) * num) % den == 0; }
    int apply(int base) const {
        if (!divides(base))
            throw diffcore::ConfigError("expansion " + std::to_string(num) + "/" +
                                        std::to_string(den) + " of " + std::to_string(base) +
                                        " channels is not an integer");
        return int(std::int64_t(base) * num / den);
    }
    bool operator==(const ExpansionRate&) const = default;
};

inline std::vector<ExpansionRate> expansion_three() {
    return {{1, 2}, {3, 4}, {1, 1}};  // 0.5, 0.75, 1.0
}

inline std::vector<ExpansionRate> expansion_two() {
    return {{3, 4}, {1, 1}};  // 0.75, 1.0
}

inline ExpansionRate expansion_from_value(double v) {
    for (const auto& e : {ExpansionRate{1, 2}, ExpansionRate{3, 4}, ExpansionRate{1, 1}})
        if (std::abs(e.value() - v) < 1e-9) return e;
    throw diffcore::InputError("unknown expansion rate " + std::to_string(v));
}

}  // namespace chansearch
