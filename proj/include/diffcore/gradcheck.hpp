#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "diffcore/ops.hpp"
#include "diffcore/rng.hpp"
#include "diffcore/tensor.hpp"

namespace diffcore {

// Central-difference check against the reverse-mode gradient.
//
// The tensor-valued output is scalarized by a fixed random projection <f, r>
// (all-ones would let sign-symmetric bugs cancel). The projection is drawn
// from a constant internal seed, so results are reproducible. Rejects
// stochastic functions up front by evaluating twice and comparing bitwise.
//
// Returns max over every element of every requires-grad input of
//   |analytic - central_diff| / max(|analytic|, |central_diff|, 1e-8).
template <typename T>
double gradcheck(const std::function<Tensor<T>(const std::vector<Tensor<T>>&)>& f,
                 std::vector<Tensor<T>> inputs, double eps) {
    if (eps <= 0.0) throw ConfigError("gradcheck: eps must be positive");

    Tensor<T> out0, out1;
    {
        NoGradGuard ng;
        out0 = f(inputs);
        out1 = f(inputs);
    }
    if (!(out0.shape() == out1.shape()) ||
        std::memcmp(out0.values().data(), out1.values().data(),
                    out0.values().size() * sizeof(T)) != 0)
        throw InputError("gradcheck: function is not deterministic");

    Rng rng(0x6AD5EC4ULL);
    std::vector<T> proj(out0.values().size());
    for (T& p : proj) p = T(rng.uniform(-1.0, 1.0));

    auto project = [&](const Tensor<T>& y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < proj.size(); ++i)
            acc += double(y.values()[i]) * double(proj[i]);
        return acc;
    };

    // analytic gradients
    std::vector<std::vector<T>> analytic;
    {
        for (auto& in : inputs) in.zero_grad();
        Tensor<T> loss = weighted_sum(f(inputs), proj);
        backward(loss);
        for (auto& in : inputs)
            analytic.push_back(in.requires_grad() ? in.grad() : std::vector<T>());
    }

    double worst = 0.0;
    NoGradGuard ng;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        if (!inputs[t].requires_grad()) continue;
        std::vector<T>& vals = inputs[t].values();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const T orig = vals[j];
            vals[j] = T(double(orig) + eps);
            const double hi_x = double(vals[j]);
            const double f_hi = project(f(inputs));
            vals[j] = T(double(orig) - eps);
            const double lo_x = double(vals[j]);
            const double f_lo = project(f(inputs));
            vals[j] = orig;
            const double cd = (f_hi - f_lo) / (hi_x - lo_x);
            const double a = double(analytic[t][j]);
            const double rel = std::abs(a - cd) / std::max({std::abs(a), std::abs(cd), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace diffcore
