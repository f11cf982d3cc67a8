#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "diffcore/errors.hpp"

namespace diffcore {

// Rank-4 shape: batch N, channels C, height H, width W.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    std::int64_t numel() const { return std::int64_t(n) * c * h * w; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

template <typename T>
struct TensorImpl;

// One recorded operation: inputs it read plus a hook that routes the output's
// gradient back into them. Whatever the backward pass needs (argmax indices,
// cached activations) lives in the hook's closure.
template <typename T>
struct ComputeNode {
    const char* op = "";
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    std::function<void(TensorImpl<T>&)> backward;
};

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::shared_ptr<ComputeNode<T>> node;  // null for leaves

    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), T(0));
    }
};

// Per-thread switch: when off, ops compute values but record no graph.
inline bool& grad_enabled() {
    thread_local bool on = true;
    return on;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
    ~NoGradGuard() { grad_enabled() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Shared handle to a tensor. Copies alias the same storage, torch-style.
template <typename T>
class Tensor {
  public:
    using Scalar = T;

    Tensor() = default;

    static Tensor zeros(Shape s, bool requires_grad = false) {
        return from(s, std::vector<T>(std::size_t(s.numel()), T(0)), requires_grad);
    }

    static Tensor full(Shape s, T v, bool requires_grad = false) {
        return from(s, std::vector<T>(std::size_t(s.numel()), v), requires_grad);
    }

    static Tensor from(Shape s, std::vector<T> v, bool requires_grad = false) {
        if (std::int64_t(v.size()) != s.numel())
            throw InputError("tensor: " + std::to_string(v.size()) +
                             " values for shape " + s.str());
        Tensor t;
        t.impl_ = std::make_shared<TensorImpl<T>>();
        t.impl_->shape = s;
        t.impl_->values = std::move(v);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    // Length-k vector stored on the channel axis; the layout used for
    // architecture-weight vectors.
    static Tensor vec(std::vector<T> v, bool requires_grad = false) {
        Shape s{1, int(v.size()), 1, 1};
        return from(s, std::move(v), requires_grad);
    }

    static Tensor scalar(T v, bool requires_grad = false) {
        return from(Shape{1, 1, 1, 1}, {v}, requires_grad);
    }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::int64_t numel() const { return impl_->shape.numel(); }

    std::vector<T>& values() { return impl_->values; }
    const std::vector<T>& values() const { return impl_->values; }

    // Allocates (zeroed) on first access.
    std::vector<T>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    bool has_grad() const { return !impl_->grad.empty(); }
    void zero_grad() { impl_->grad.clear(); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool b) { impl_->requires_grad = b; }

    std::int64_t index(int n, int c, int h, int w) const {
        const Shape& s = impl_->shape;
        return ((std::int64_t(n) * s.c + c) * s.h + h) * s.w + w;
    }
    T at(int n, int c, int h, int w) const { return impl_->values[std::size_t(index(n, c, h, w))]; }

    const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

  private:
    std::shared_ptr<TensorImpl<T>> impl_;
};

// Builds an op result and records the node when any input needs gradients.
template <typename T>
Tensor<T> make_result(Shape s, std::vector<T> vals, const char* op,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(TensorImpl<T>&)> backward) {
    bool needs = false;
    if (grad_enabled()) {
        for (const auto& in : inputs)
            if (in.defined() && in.requires_grad()) needs = true;
    }
    Tensor<T> out = Tensor<T>::from(s, std::move(vals), needs);
    if (needs) {
        auto node = std::make_shared<ComputeNode<T>>();
        node->op = op;
        for (const auto& in : inputs)
            if (in.defined()) node->inputs.push_back(in.impl());
        node->backward = std::move(backward);
        out.impl()->node = node;
    }
    return out;
}

// Reverse-mode sweep from a scalar loss. Gradients accumulate additively,
// both across multiple uses inside one graph and across repeated calls.
template <typename T>
void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw InputError("backward: loss must be a scalar tensor");
    if (!loss.requires_grad()) return;

    // Post-order DFS; reversed, consumers run before producers.
    struct Frame {
        TensorImpl<T>* t;
        std::size_t next;
    };
    std::vector<TensorImpl<T>*> order;
    std::unordered_set<TensorImpl<T>*> seen;
    std::vector<Frame> stack;
    stack.push_back({loss.impl().get(), 0});
    seen.insert(loss.impl().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        ComputeNode<T>* node = f.t->node.get();
        std::size_t n_in = node ? node->inputs.size() : 0;
        if (f.next < n_in) {
            TensorImpl<T>* in = node->inputs[f.next++].get();
            if (in->node && !seen.count(in)) {
                seen.insert(in);
                stack.push_back({in, 0});
            }
        } else {
            order.push_back(f.t);
            stack.pop_back();
        }
    }

    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl<T>* t = *it;
        if (t->node && t->node->backward) {
            t->ensure_grad();
            t->node->backward(*t);
        }
    }
}

}  // namespace diffcore
