#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "diffcore/tensor.hpp"

namespace diffcore {

namespace detail {

template <typename T>
void accumulate(TensorImpl<T>& in, const std::vector<T>& delta) {
    in.ensure_grad();
    for (std::size_t i = 0; i < delta.size(); ++i) in.grad[i] += delta[i];
}

}  // namespace detail

// ---- elementwise ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw InputError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    std::vector<T> out(a.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_result<T>(a.shape(), std::move(out), "add", {a, b},
                          [ai = a.impl(), bi = b.impl()](TensorImpl<T>& o) {
                              if (ai->requires_grad) detail::accumulate(*ai, o.grad);
                              if (bi->requires_grad) detail::accumulate(*bi, o.grad);
                          });
}

// Channel-prefix-aligned sum: N/H/W must match, the narrower input adds into
// the first channels of the wider one. Used when fusing edge outputs whose
// sampled expansion rates differ.
template <typename T>
Tensor<T> add_widen(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
        throw InputError("add_widen: spatial/batch mismatch " + sa.str() + " vs " + sb.str());
    if (sa.c == sb.c) return add(a, b);
    const Tensor<T>& wide = sa.c > sb.c ? a : b;
    const Tensor<T>& slim = sa.c > sb.c ? b : a;
    Shape so = wide.shape();
    std::vector<T> out = wide.values();
    const Shape& ss = slim.shape();
    const std::int64_t plane = std::int64_t(ss.h) * ss.w;
    for (int n = 0; n < ss.n; ++n)
        for (int c = 0; c < ss.c; ++c) {
            const T* src = slim.values().data() + (std::int64_t(n) * ss.c + c) * plane;
            T* dst = out.data() + (std::int64_t(n) * so.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
        }
    return make_result<T>(so, std::move(out), "add_widen", {wide, slim},
                          [wi = wide.impl(), si = slim.impl()](TensorImpl<T>& o) {
                              if (wi->requires_grad) detail::accumulate(*wi, o.grad);
                              if (si->requires_grad) {
                                  si->ensure_grad();
                                  const Shape& ss = si->shape;
                                  const Shape& so = o.shape;
                                  const std::int64_t plane = std::int64_t(ss.h) * ss.w;
                                  for (int n = 0; n < ss.n; ++n)
                                      for (int c = 0; c < ss.c; ++c) {
                                          const T* g = o.grad.data() + (std::int64_t(n) * so.c + c) * plane;
                                          T* dst = si->grad.data() + (std::int64_t(n) * ss.c + c) * plane;
                                          for (std::int64_t i = 0; i < plane; ++i) dst[i] += g[i];
                                      }
                              }
                          });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (!(a.shape() == b.shape()))
        throw InputError("mul: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    std::vector<T> out(a.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return make_result<T>(a.shape(), std::move(out), "mul", {a, b},
                          [ai = a.impl(), bi = b.impl()](TensorImpl<T>& o) {
                              if (ai->requires_grad) {
                                  ai->ensure_grad();
                                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                                      ai->grad[i] += o.grad[i] * bi->values[i];
                              }
                              if (bi->requires_grad) {
                                  bi->ensure_grad();
                                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                                      bi->grad[i] += o.grad[i] * ai->values[i];
                              }
                          });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
    std::vector<T> out(x.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * s;
    return make_result<T>(x.shape(), std::move(out), "scale", {x},
                          [xi = x.impl(), s](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < o.grad.size(); ++i)
                                  xi->grad[i] += o.grad[i] * s;
                          });
}

// x scaled by a 1-element tensor; gradients reach both factors.
template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s) {
    if (s.numel() != 1) throw InputError("scale_by: scale must be a 1-element tensor");
    const T sv = s.values()[0];
    std::vector<T> out(x.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * sv;
    return make_result<T>(x.shape(), std::move(out), "scale_by", {x, s},
                          [xi = x.impl(), si = s.impl(), sv](TensorImpl<T>& o) {
                              if (xi->requires_grad) {
                                  xi->ensure_grad();
                                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                                      xi->grad[i] += o.grad[i] * sv;
                              }
                              if (si->requires_grad) {
                                  si->ensure_grad();
                                  double acc = 0.0;
                                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                                      acc += double(o.grad[i]) * double(xi->values[i]);
                                  si->grad[0] += T(acc);
                              }
                          });
}

// One component of a channel vector as a 1-element tensor.
template <typename T>
Tensor<T> select_component(const Tensor<T>& v, int idx) {
    if (idx < 0 || std::int64_t(idx) >= v.numel())
        throw InputError("select_component: index out of range");
    std::vector<T> out{v.values()[std::size_t(idx)]};
    return make_result<T>(Shape{1, 1, 1, 1}, std::move(out), "select_component", {v},
                          [vi = v.impl(), idx](TensorImpl<T>& o) {
                              if (!vi->requires_grad) return;
                              vi->ensure_grad();
                              vi->grad[std::size_t(idx)] += o.grad[0];
                          });
}

template <typename T>
Tensor<T> silu(const Tensor<T>& x) {
    std::vector<T> out(x.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = double(x.values()[i]);
        out[i] = T(v / (1.0 + std::exp(-v)));
    }
    return make_result<T>(x.shape(), std::move(out), "silu", {x},
                          [xi = x.impl()](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                  double v = double(xi->values[i]);
                                  double s = 1.0 / (1.0 + std::exp(-v));
                                  xi->grad[i] += o.grad[i] * T(s * (1.0 + v * (1.0 - s)));
                              }
                          });
}

// ---- reductions ----

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    double acc = 0.0;
    for (T v : x.values()) acc += double(v);
    return make_result<T>(Shape{1, 1, 1, 1}, {T(acc)}, "sum", {x},
                          [xi = x.impl()](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < xi->grad.size(); ++i)
                                  xi->grad[i] += o.grad[0];
                          });
}

// <x, r> with a constant projection; the scalarizer used by gradcheck.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, const std::vector<T>& r) {
    if (r.size() != x.values().size())
        throw InputError("weighted_sum: projection length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += double(x.values()[i]) * double(r[i]);
    return make_result<T>(Shape{1, 1, 1, 1}, {T(acc)}, "weighted_sum", {x},
                          [xi = x.impl(), r](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < r.size(); ++i)
                                  xi->grad[i] += o.grad[0] * r[i];
                          });
}

// ---- normalization ----

// Softmax over the channel axis at every (n,h,w) position, max-subtracted.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.c < 1) throw InputError("softmax_channels: empty channel axis");
    std::vector<T> out(x.values().size());
    const std::int64_t plane = std::int64_t(s.h) * s.w;
    for (int n = 0; n < s.n; ++n)
        for (std::int64_t p = 0; p < plane; ++p) {
            double mx = -1e300;
            for (int c = 0; c < s.c; ++c)
                mx = std::max(mx, double(x.values()[std::size_t((std::int64_t(n) * s.c + c) * plane + p)]));
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                std::size_t i = std::size_t((std::int64_t(n) * s.c + c) * plane + p);
                double e = std::exp(double(x.values()[i]) - mx);
                out[i] = T(e);
                z += e;
            }
            for (int c = 0; c < s.c; ++c) {
                std::size_t i = std::size_t((std::int64_t(n) * s.c + c) * plane + p);
                out[i] = T(double(out[i]) / z);
            }
        }
    return make_result<T>(s, std::move(out), "softmax_channels", {x},
                          [xi = x.impl()](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              const Shape& s = o.shape;
                              const std::int64_t plane = std::int64_t(s.h) * s.w;
                              for (int n = 0; n < s.n; ++n)
                                  for (std::int64_t p = 0; p < plane; ++p) {
                                      double dot = 0.0;
                                      for (int c = 0; c < s.c; ++c) {
                                          std::size_t i = std::size_t((std::int64_t(n) * s.c + c) * plane + p);
                                          dot += double(o.grad[i]) * double(o.values[i]);
                                      }
                                      for (int c = 0; c < s.c; ++c) {
                                          std::size_t i = std::size_t((std::int64_t(n) * s.c + c) * plane + p);
                                          xi->grad[i] += T(double(o.values[i]) * (double(o.grad[i]) - dot));
                                      }
                                  }
                          });
}

// ---- structural ----

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
    if (xs.empty()) throw InputError("concat_channels: no inputs");
    const Shape& s0 = xs[0].shape();
    int c_total = 0;
    for (const auto& x : xs) {
        const Shape& s = x.shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
            throw InputError("concat_channels: mismatched dims " + s.str() + " vs " + s0.str());
        c_total += s.c;
    }
    Shape so{s0.n, c_total, s0.h, s0.w};
    std::vector<T> out(std::size_t(so.numel()));
    const std::int64_t plane = std::int64_t(s0.h) * s0.w;
    for (int n = 0; n < so.n; ++n) {
        int co = 0;
        for (const auto& x : xs) {
            const Shape& s = x.shape();
            const T* src = x.values().data() + std::int64_t(n) * s.c * plane;
            T* dst = out.data() + (std::int64_t(n) * so.c + co) * plane;
            std::copy(src, src + std::int64_t(s.c) * plane, dst);
            co += s.c;
        }
    }
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    for (const auto& x : xs) impls.push_back(x.impl());
    return make_result<T>(so, std::move(out), "concat_channels", xs,
                          [impls, plane](TensorImpl<T>& o) {
                              for (int n = 0; n < o.shape.n; ++n) {
                                  int co = 0;
                                  for (const auto& xi : impls) {
                                      const Shape& s = xi->shape;
                                      if (xi->requires_grad) {
                                          xi->ensure_grad();
                                          const T* g = o.grad.data() + (std::int64_t(n) * o.shape.c + co) * plane;
                                          T* dst = xi->grad.data() + std::int64_t(n) * s.c * plane;
                                          for (std::int64_t i = 0; i < std::int64_t(s.c) * plane; ++i)
                                              dst[i] += g[i];
                                      }
                                      co += s.c;
                                  }
                              }
                          });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
    const Shape& s = x.shape();
    Shape so{s.n, s.c, s.h * 2, s.w * 2};
    std::vector<T> out(std::size_t(so.numel()));
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* src = x.values().data() + (std::int64_t(n) * s.c + c) * s.h * s.w;
            T* dst = out.data() + (std::int64_t(n) * s.c + c) * so.h * so.w;
            for (int i = 0; i < so.h; ++i)
                for (int j = 0; j < so.w; ++j)
                    dst[std::int64_t(i) * so.w + j] = src[std::int64_t(i / 2) * s.w + j / 2];
        }
    return make_result<T>(so, std::move(out), "upsample_nearest2x", {x},
                          [xi = x.impl()](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              const Shape& s = xi->shape;
                              const Shape& so = o.shape;
                              for (int n = 0; n < s.n; ++n)
                                  for (int c = 0; c < s.c; ++c) {
                                      const T* g = o.grad.data() + (std::int64_t(n) * s.c + c) * so.h * so.w;
                                      T* dst = xi->grad.data() + (std::int64_t(n) * s.c + c) * s.h * s.w;
                                      for (int i = 0; i < so.h; ++i)
                                          for (int j = 0; j < so.w; ++j)
                                              dst[std::int64_t(i / 2) * s.w + j / 2] += g[std::int64_t(i) * so.w + j];
                                  }
                          });
}

// 2x2 pixel blocks folded onto channels: (N,C,H,W) -> (N,4C,H/2,W/2).
// Block order by (row offset, col offset): (0,0), (1,0), (0,1), (1,1).
template <typename T>
Tensor<T> space_to_depth2(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw InputError("space_to_depth2: H and W must be even, got " + s.str());
    Shape so{s.n, s.c * 4, s.h / 2, s.w / 2};
    std::vector<T> out(std::size_t(so.numel()));
    static constexpr int kOff[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int n = 0; n < s.n; ++n)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < s.c; ++c) {
                const T* src = x.values().data() + (std::int64_t(n) * s.c + c) * s.h * s.w;
                T* dst = out.data() + ((std::int64_t(n) * so.c) + b * s.c + c) * so.h * so.w;
                for (int i = 0; i < so.h; ++i)
                    for (int j = 0; j < so.w; ++j)
                        dst[std::int64_t(i) * so.w + j] =
                            src[std::int64_t(2 * i + kOff[b][0]) * s.w + 2 * j + kOff[b][1]];
            }
    return make_result<T>(so, std::move(out), "space_to_depth2", {x},
                          [xi = x.impl()](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              const Shape& s = xi->shape;
                              const Shape& so = o.shape;
                              static constexpr int kOff[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
                              for (int n = 0; n < s.n; ++n)
                                  for (int b = 0; b < 4; ++b)
                                      for (int c = 0; c < s.c; ++c) {
                                          const T* g = o.grad.data() + ((std::int64_t(n) * so.c) + b * s.c + c) * so.h * so.w;
                                          T* dst = xi->grad.data() + (std::int64_t(n) * s.c + c) * s.h * s.w;
                                          for (int i = 0; i < so.h; ++i)
                                              for (int j = 0; j < so.w; ++j)
                                                  dst[std::int64_t(2 * i + kOff[b][0]) * s.w + 2 * j + kOff[b][1]] +=
                                                      g[std::int64_t(i) * so.w + j];
                                      }
                          });
}

// ---- axis slicing (gradient routes back into the sliced region only) ----

// First `count` slots of the N axis (out-channel prefix for weights).
template <typename T>
Tensor<T> slice_dim0_prefix(const Tensor<T>& x, int count) {
    const Shape& s = x.shape();
    if (count <= 0 || count > s.n)
        throw InputError("slice_dim0_prefix: count " + std::to_string(count) + " for " + s.str());
    Shape so{count, s.c, s.h, s.w};
    const std::int64_t block = std::int64_t(s.c) * s.h * s.w;
    std::vector<T> out(x.values().begin(), x.values().begin() + count * block);
    return make_result<T>(so, std::move(out), "slice_dim0_prefix", {x},
                          [xi = x.impl(), count, block](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (std::int64_t i = 0; i < count * block; ++i)
                                  xi->grad[std::size_t(i)] += o.grad[std::size_t(i)];
                          });
}

// `count` slots of the C axis starting at `begin` (in-channel block).
template <typename T>
Tensor<T> slice_dim1_range(const Tensor<T>& x, int begin, int count) {
    const Shape& s = x.shape();
    if (begin < 0 || count <= 0 || begin + count > s.c)
        throw InputError("slice_dim1_range: [" + std::to_string(begin) + "," +
                         std::to_string(begin + count) + ") for " + s.str());
    Shape so{s.n, count, s.h, s.w};
    const std::int64_t plane = std::int64_t(s.h) * s.w;
    std::vector<T> out(std::size_t(so.numel()));
    for (int n = 0; n < s.n; ++n) {
        const T* src = x.values().data() + (std::int64_t(n) * s.c + begin) * plane;
        T* dst = out.data() + std::int64_t(n) * count * plane;
        std::copy(src, src + std::int64_t(count) * plane, dst);
    }
    return make_result<T>(so, std::move(out), "slice_dim1_range", {x},
                          [xi = x.impl(), begin, count, plane](TensorImpl<T>& o) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              const Shape& s = xi->shape;
                              for (int n = 0; n < s.n; ++n) {
                                  const T* g = o.grad.data() + std::int64_t(n) * count * plane;
                                  T* dst = xi->grad.data() + (std::int64_t(n) * s.c + begin) * plane;
                                  for (std::int64_t i = 0; i < std::int64_t(count) * plane; ++i)
                                      dst[i] += g[i];
                              }
                          });
}

// ---- plain vector math (no graph) ----

inline std::vector<double> softmax(const std::vector<double>& v) {
    if (v.empty()) throw InputError("softmax: empty vector");
    double mx = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        z += out[i];
    }
    for (double& o : out) o /= z;
    return out;
}

inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double q : p)
        if (q > 0.0) h -= q * std::log(q);
    return h;
}

inline int argmax(const std::vector<double>& v) {
    if (v.empty()) throw InputError("argmax: empty vector");
    int best = 0;
    for (int i = 1; i < int(v.size()); ++i)
        if (v[std::size_t(i)] > v[std::size_t(best)]) best = i;
    return best;
}

}  // namespace diffcore
