#include "lexcd/ops.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace lexcd {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
T stable_sigmoid(T x) {
    if (x >= T(0)) {
        return T(1) / (T(1) + std::exp(-x));
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

Shape4 broadcast_shape(const Shape4& a, const Shape4& b, const char* op) {
    Shape4 out;
    for (int axis = 0; axis < 4; ++axis) {
        const int da = a[axis];
        const int db = b[axis];
        if (da != db && da != 1 && db != 1) {
            throw std::invalid_argument(std::string(op) + ": shapes " + a.str() +
                                        " and " + b.str() + " are not broadcastable");
        }
        out[axis] = std::max(da, db);
    }
    return out;
}

// Flat index into `s` for a logical index of `full`, treating size-1 axes of
// `s` as broadcast.
inline long long broadcast_index(const Shape4& s, int n, int c, int h, int w) {
    return flat_index(s, s.n == 1 ? 0 : n, s.c == 1 ? 0 : c, s.h == 1 ? 0 : h,
                      s.w == 1 ? 0 : w);
}

}  // namespace

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::array<int, 4>& perm) {
    std::array<bool, 4> seen{};
    for (int p : perm) {
        if (p < 0 || p > 3 || seen[static_cast<size_t>(p)]) {
            throw std::invalid_argument("permute: invalid axis order");
        }
        seen[static_cast<size_t>(p)] = true;
    }
    const Shape4& xs = x.shape();
    Shape4 os;
    for (int i = 0; i < 4; ++i) os[i] = xs[perm[static_cast<size_t>(i)]];

    auto out = detail::make_node<T>(os, {x.node_ptr()});
    const auto& xv = x.value();
    auto& ov = out->val;
    // in-strides arranged in output-axis order
    long long xstride[4] = {static_cast<long long>(xs.c) * xs.h * xs.w,
                            static_cast<long long>(xs.h) * xs.w, xs.w, 1};
    long long stride_for_out[4];
    for (int i = 0; i < 4; ++i) stride_for_out[i] = xstride[perm[static_cast<size_t>(i)]];

    size_t o = 0;
    for (int i0 = 0; i0 < os.n; ++i0)
        for (int i1 = 0; i1 < os.c; ++i1)
            for (int i2 = 0; i2 < os.h; ++i2)
                for (int i3 = 0; i3 < os.w; ++i3) {
                    const long long xi = i0 * stride_for_out[0] + i1 * stride_for_out[1] +
                                         i2 * stride_for_out[2] + i3 * stride_for_out[3];
                    ov[o++] = xv[static_cast<size_t>(xi)];
                }

    if (out->requires_grad) {
        out->backward_fn = [os, stride_for_out_0 = stride_for_out[0],
                            stride_for_out_1 = stride_for_out[1],
                            stride_for_out_2 = stride_for_out[2],
                            stride_for_out_3 = stride_for_out[3]](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            size_t o = 0;
            for (int i0 = 0; i0 < os.n; ++i0)
                for (int i1 = 0; i1 < os.c; ++i1)
                    for (int i2 = 0; i2 < os.h; ++i2)
                        for (int i3 = 0; i3 < os.w; ++i3) {
                            const long long xi = i0 * stride_for_out_0 + i1 * stride_for_out_1 +
                                                 i2 * stride_for_out_2 + i3 * stride_for_out_3;
                            p.grad[static_cast<size_t>(xi)] += self.grad[o++];
                        }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const std::vector<long long>& dims) {
    if (dims.empty() || dims.size() > 4) {
        throw std::invalid_argument("reshape: need 1..4 dims");
    }
    long long known = 1;
    int infer_axis = -1;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] == -1) {
            if (infer_axis >= 0) throw std::invalid_argument("reshape: multiple -1 dims");
            infer_axis = static_cast<int>(i);
        } else if (dims[i] >= 1) {
            known *= dims[i];
        } else {
            throw std::invalid_argument("reshape: dims must be positive or -1");
        }
    }
    const long long total = x.numel();
    std::vector<long long> resolved = dims;
    if (infer_axis >= 0) {
        if (total % known != 0) {
            throw std::invalid_argument("reshape: cannot infer -1 for " + x.shape().str());
        }
        resolved[static_cast<size_t>(infer_axis)] = total / known;
        known = total;
    }
    if (known != total) {
        throw std::invalid_argument("reshape: product of new dims " + std::to_string(known) +
                                    " does not match element count of " + x.shape().str());
    }
    Shape4 os;
    for (size_t i = 0; i < resolved.size(); ++i) os[static_cast<int>(i)] = static_cast<int>(resolved[i]);

    auto out = detail::make_node<T>(os, {x.node_ptr()});
    out->val = x.value();
    if (out->requires_grad) {
        out->backward_fn = [](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    auto out = detail::make_node<T>(x.shape(), {x.node_ptr()});
    const auto& xv = x.value();
    for (size_t i = 0; i < xv.size(); ++i) out->val[i] = stable_sigmoid(xv[i]);
    if (out->requires_grad) {
        out->backward_fn = [](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) {
                const T s = self.val[i];
                p.grad[i] += self.grad[i] * s * (T(1) - s);
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    auto out = detail::make_node<T>(x.shape(), {x.node_ptr()});
    const auto& xv = x.value();
    for (size_t i = 0; i < xv.size(); ++i) out->val[i] = xv[i] > T(0) ? xv[i] : T(0);
    if (out->requires_grad) {
        out->backward_fn = [](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) {
                if (p.val[i] > T(0)) p.grad[i] += self.grad[i];
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift) {
    auto out = detail::make_node<T>(x.shape(), {x.node_ptr()});
    const auto& xv = x.value();
    for (size_t i = 0; i < xv.size(); ++i) out->val[i] = scale * xv[i] + shift;
    if (out->requires_grad) {
        out->backward_fn = [scale](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += scale * self.grad[i];
        };
    }
    return Tensor<T>::from_node(out);
}

namespace {

// add and mul share the same broadcast walk.
template <typename T, bool kMul>
Tensor<T> binary_broadcast(const Tensor<T>& a, const Tensor<T>& b, const char* name) {
    const Shape4 os = broadcast_shape(a.shape(), b.shape(), name);
    auto out = detail::make_node<T>(os, {a.node_ptr(), b.node_ptr()});
    const Shape4 as = a.shape();
    const Shape4 bs = b.shape();
    const auto& av = a.value();
    const auto& bv = b.value();
    size_t o = 0;
    for (int n = 0; n < os.n; ++n)
        for (int c = 0; c < os.c; ++c)
            for (int h = 0; h < os.h; ++h)
                for (int w = 0; w < os.w; ++w, ++o) {
                    const T va = av[static_cast<size_t>(broadcast_index(as, n, c, h, w))];
                    const T vb = bv[static_cast<size_t>(broadcast_index(bs, n, c, h, w))];
                    out->val[o] = kMul ? va * vb : va + vb;
                }
    if (out->requires_grad) {
        out->backward_fn = [os, as, bs](detail::Node<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            const bool ga = pa.requires_grad;
            const bool gb = pb.requires_grad;
            if (ga) pa.ensure_grad();
            if (gb) pb.ensure_grad();
            size_t o = 0;
            for (int n = 0; n < os.n; ++n)
                for (int c = 0; c < os.c; ++c)
                    for (int h = 0; h < os.h; ++h)
                        for (int w = 0; w < os.w; ++w, ++o) {
                            const T g = self.grad[o];
                            const size_t ia = static_cast<size_t>(broadcast_index(as, n, c, h, w));
                            const size_t ib = static_cast<size_t>(broadcast_index(bs, n, c, h, w));
                            if constexpr (kMul) {
                                if (ga) pa.grad[ia] += g * pb.val[ib];
                                if (gb) pb.grad[ib] += g * pa.val[ia];
                            } else {
                                if (ga) pa.grad[ia] += g;
                                if (gb) pb.grad[ib] += g;
                            }
                        }
        };
    }
    return Tensor<T>::from_node(out);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_broadcast<T, false>(a, b, "add");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_broadcast<T, true>(a, b, "mul");
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape4 as = a.shape();
    const Shape4 bs = b.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w) {
        throw std::invalid_argument("concat_channels: shapes " + as.str() + " and " +
                                    bs.str() + " differ outside the channel axis");
    }
    Shape4 os{as.n, as.c + bs.c, as.h, as.w};
    auto out = detail::make_node<T>(os, {a.node_ptr(), b.node_ptr()});
    const auto& av = a.value();
    const auto& bv = b.value();
    const long long plane = static_cast<long long>(as.h) * as.w;
    for (int n = 0; n < os.n; ++n) {
        T* dst = out->val.data() + static_cast<long long>(n) * os.c * plane;
        std::copy_n(av.data() + static_cast<long long>(n) * as.c * plane, as.c * plane, dst);
        std::copy_n(bv.data() + static_cast<long long>(n) * bs.c * plane, bs.c * plane,
                    dst + as.c * plane);
    }
    if (out->requires_grad) {
        out->backward_fn = [as, bs, plane](detail::Node<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            const int oc = as.c + bs.c;
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (int n = 0; n < as.n; ++n) {
                    const T* g = self.grad.data() + static_cast<long long>(n) * oc * plane;
                    T* dst = pa.grad.data() + static_cast<long long>(n) * as.c * plane;
                    for (long long i = 0; i < as.c * plane; ++i) dst[i] += g[i];
                }
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (int n = 0; n < bs.n; ++n) {
                    const T* g = self.grad.data() + static_cast<long long>(n) * oc * plane +
                                 as.c * plane;
                    T* dst = pb.grad.data() + static_cast<long long>(n) * bs.c * plane;
                    for (long long i = 0; i < bs.c * plane; ++i) dst[i] += g[i];
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    const Shape4 xs = x.shape();
    auto out = detail::make_node<T>(Shape4{xs.n, xs.c, 1, 1}, {x.node_ptr()});
    const auto& xv = x.value();
    const long long plane = static_cast<long long>(xs.h) * xs.w;
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const T* src = xv.data() + (static_cast<long long>(n) * xs.c + c) * plane;
            double acc = 0.0;
            for (long long i = 0; i < plane; ++i) acc += static_cast<double>(src[i]);
            out->val[static_cast<size_t>(n) * xs.c + c] = static_cast<T>(acc / static_cast<double>(plane));
        }
    if (out->requires_grad) {
        out->backward_fn = [xs, plane](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (int n = 0; n < xs.n; ++n)
                for (int c = 0; c < xs.c; ++c) {
                    const T g = self.grad[static_cast<size_t>(n) * xs.c + c] / static_cast<T>(plane);
                    T* dst = p.grad.data() + (static_cast<long long>(n) * xs.c + c) * plane;
                    for (long long i = 0; i < plane; ++i) dst[i] += g;
                }
        };
    }
    return Tensor<T>::from_node(out);
}

namespace {

struct LerpAxis {
    std::vector<int> lo, hi;
    std::vector<double> t;
};

// Sample positions for align-corners=false: src = (dst + 0.5)/factor - 0.5,
// clamped to the valid range (edge pixels replicate).
LerpAxis lerp_axis(int out_size, int factor) {
    LerpAxis ax;
    const int in_size = out_size / factor;
    ax.lo.resize(static_cast<size_t>(out_size));
    ax.hi.resize(static_cast<size_t>(out_size));
    ax.t.resize(static_cast<size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        const double src = (o + 0.5) / factor - 0.5;
        const double f = std::floor(src);
        int lo = static_cast<int>(f);
        double t = src - f;
        int hi = lo + 1;
        if (lo < 0) {
            lo = 0;
            hi = 0;
            t = 0.0;
        } else if (hi > in_size - 1) {
            hi = in_size - 1;
            if (lo > in_size - 1) lo = in_size - 1;
            if (lo == hi) t = 0.0;
        }
        ax.lo[static_cast<size_t>(o)] = lo;
        ax.hi[static_cast<size_t>(o)] = hi;
        ax.t[static_cast<size_t>(o)] = t;
    }
    return ax;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int factor) {
    if (factor < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
    const Shape4 xs = x.shape();
    const Shape4 os{xs.n, xs.c, xs.h * factor, xs.w * factor};
    auto out = detail::make_node<T>(os, {x.node_ptr()});
    const LerpAxis ay = lerp_axis(os.h, factor);
    const LerpAxis axx = lerp_axis(os.w, factor);
    const auto& xv = x.value();
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
            const T* src = xv.data() + (static_cast<long long>(n) * xs.c + c) *
                                           (static_cast<long long>(xs.h) * xs.w);
            T* dst = out->val.data() + (static_cast<long long>(n) * os.c + c) *
                                           (static_cast<long long>(os.h) * os.w);
            for (int oy = 0; oy < os.h; ++oy) {
                const int y0 = ay.lo[static_cast<size_t>(oy)];
                const int y1 = ay.hi[static_cast<size_t>(oy)];
                const double ty = ay.t[static_cast<size_t>(oy)];
                for (int ox = 0; ox < os.w; ++ox) {
                    const int x0 = axx.lo[static_cast<size_t>(ox)];
                    const int x1 = axx.hi[static_cast<size_t>(ox)];
                    const double tx = axx.t[static_cast<size_t>(ox)];
                    const double v00 = src[static_cast<long long>(y0) * xs.w + x0];
                    const double v01 = src[static_cast<long long>(y0) * xs.w + x1];
                    const double v10 = src[static_cast<long long>(y1) * xs.w + x0];
                    const double v11 = src[static_cast<long long>(y1) * xs.w + x1];
                    const double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                                     ty * ((1 - tx) * v10 + tx * v11);
                    dst[static_cast<long long>(oy) * os.w + ox] = static_cast<T>(v);
                }
            }
        }
    if (out->requires_grad) {
        out->backward_fn = [xs, os, ay, axx](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (int n = 0; n < xs.n; ++n)
                for (int c = 0; c < xs.c; ++c) {
                    T* gsrc = p.grad.data() + (static_cast<long long>(n) * xs.c + c) *
                                                  (static_cast<long long>(xs.h) * xs.w);
                    const T* gdst = self.grad.data() + (static_cast<long long>(n) * os.c + c) *
                                                           (static_cast<long long>(os.h) * os.w);
                    for (int oy = 0; oy < os.h; ++oy) {
                        const int y0 = ay.lo[static_cast<size_t>(oy)];
                        const int y1 = ay.hi[static_cast<size_t>(oy)];
                        const double ty = ay.t[static_cast<size_t>(oy)];
                        for (int ox = 0; ox < os.w; ++ox) {
                            const int x0 = axx.lo[static_cast<size_t>(ox)];
                            const int x1 = axx.hi[static_cast<size_t>(ox)];
                            const double tx = axx.t[static_cast<size_t>(ox)];
                            const double g = gdst[static_cast<long long>(oy) * os.w + ox];
                            gsrc[static_cast<long long>(y0) * xs.w + x0] +=
                                static_cast<T>(g * (1 - ty) * (1 - tx));
                            gsrc[static_cast<long long>(y0) * xs.w + x1] +=
                                static_cast<T>(g * (1 - ty) * tx);
                            gsrc[static_cast<long long>(y1) * xs.w + x0] +=
                                static_cast<T>(g * ty * (1 - tx));
                            gsrc[static_cast<long long>(y1) * xs.w + x1] +=
                                static_cast<T>(g * ty * tx);
                        }
                    }
                }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
    const Shape4 xs = x.shape();
    auto out = detail::make_node<T>(xs, {x.node_ptr()});
    const auto& xv = x.value();
    const long long plane = static_cast<long long>(xs.h) * xs.w;
    const long long cstride = plane;
    for (int n = 0; n < xs.n; ++n) {
        const long long base = static_cast<long long>(n) * xs.c * plane;
        for (long long px = 0; px < plane; ++px) {
            T mx = xv[static_cast<size_t>(base + px)];
            for (int c = 1; c < xs.c; ++c) {
                mx = std::max(mx, xv[static_cast<size_t>(base + c * cstride + px)]);
            }
            double denom = 0.0;
            for (int c = 0; c < xs.c; ++c) {
                denom += std::exp(static_cast<double>(xv[static_cast<size_t>(base + c * cstride + px)] - mx));
            }
            for (int c = 0; c < xs.c; ++c) {
                const double e = std::exp(static_cast<double>(xv[static_cast<size_t>(base + c * cstride + px)] - mx));
                out->val[static_cast<size_t>(base + c * cstride + px)] = static_cast<T>(e / denom);
            }
        }
    }
    if (out->requires_grad) {
        out->backward_fn = [xs, plane, cstride](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            for (int n = 0; n < xs.n; ++n) {
                const long long base = static_cast<long long>(n) * xs.c * plane;
                for (long long px = 0; px < plane; ++px) {
                    double dot = 0.0;
                    for (int c = 0; c < xs.c; ++c) {
                        const size_t i = static_cast<size_t>(base + c * cstride + px);
                        dot += static_cast<double>(self.grad[i]) * self.val[i];
                    }
                    for (int c = 0; c < xs.c; ++c) {
                        const size_t i = static_cast<size_t>(base + c * cstride + px);
                        p.grad[i] += static_cast<T>(self.val[i] * (self.grad[i] - dot));
                    }
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Mask& target) {
    const Shape4 ls = logits.shape();
    if (ls.c < 2) throw std::invalid_argument("cross_entropy: need at least 2 classes");
    if (ls.n != target.n || ls.h != target.h || ls.w != target.w) {
        throw std::invalid_argument("cross_entropy: logits " + ls.str() + " vs target " +
                                    target.shape_str());
    }
    if (!target.is_binary()) {
        throw std::invalid_argument("cross_entropy: target value outside {0,1}");
    }
    auto out = detail::make_node<T>(Shape4{1, 1, 1, 1}, {logits.node_ptr()});
    const auto& zv = logits.value();
    const long long plane = static_cast<long long>(ls.h) * ls.w;
    const long long count = static_cast<long long>(ls.n) * plane;
    double acc = 0.0;
    for (int n = 0; n < ls.n; ++n) {
        const long long base = static_cast<long long>(n) * ls.c * plane;
        for (long long px = 0; px < plane; ++px) {
            T mx = zv[static_cast<size_t>(base + px)];
            for (int c = 1; c < ls.c; ++c) {
                mx = std::max(mx, zv[static_cast<size_t>(base + c * plane + px)]);
            }
            double denom = 0.0;
            for (int c = 0; c < ls.c; ++c) {
                denom += std::exp(static_cast<double>(zv[static_cast<size_t>(base + c * plane + px)] - mx));
            }
            const int t = target.v[static_cast<size_t>(n * plane + px)];
            const double zt = static_cast<double>(zv[static_cast<size_t>(base + t * plane + px)]);
            acc += static_cast<double>(mx) + std::log(denom) - zt;
        }
    }
    out->val[0] = static_cast<T>(acc / static_cast<double>(count));
    if (out->requires_grad) {
        // softmax recomputed in the backward pass; gradient is
        // (softmax - onehot) / count.
        auto tgt = target;  // copy keeps the closure self-contained
        out->backward_fn = [ls, plane, count, tgt = std::move(tgt)](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            const T g = self.grad[0] / static_cast<T>(count);
            for (int n = 0; n < ls.n; ++n) {
                const long long base = static_cast<long long>(n) * ls.c * plane;
                for (long long px = 0; px < plane; ++px) {
                    T mx = p.val[static_cast<size_t>(base + px)];
                    for (int c = 1; c < ls.c; ++c) {
                        mx = std::max(mx, p.val[static_cast<size_t>(base + c * plane + px)]);
                    }
                    double denom = 0.0;
                    for (int c = 0; c < ls.c; ++c) {
                        denom += std::exp(static_cast<double>(p.val[static_cast<size_t>(base + c * plane + px)] - mx));
                    }
                    const int t = tgt.v[static_cast<size_t>(n * plane + px)];
                    for (int c = 0; c < ls.c; ++c) {
                        const size_t i = static_cast<size_t>(base + c * plane + px);
                        const double s = std::exp(static_cast<double>(p.val[i] - mx)) / denom;
                        p.grad[i] += g * static_cast<T>(s - (c == t ? 1.0 : 0.0));
                    }
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> row_cosine(const Tensor<T>& x, const Tensor<T>& y, T eps) {
    if (!(x.shape() == y.shape())) {
        throw std::invalid_argument("row_cosine: shapes " + x.shape().str() + " and " +
                                    y.shape().str() + " differ");
    }
    if (x.shape().h != 1 || x.shape().w != 1) {
        throw std::invalid_argument("row_cosine: expects (R,D,1,1) matrices, got " +
                                    x.shape().str());
    }
    if (!(eps > T(0))) throw std::invalid_argument("row_cosine: eps must be > 0");
    const int rows = x.shape().n;
    const int dim = x.shape().c;
    auto out = detail::make_node<T>(Shape4{rows, 1, 1, 1}, {x.node_ptr(), y.node_ptr()});
    const auto& xv = x.value();
    const auto& yv = y.value();
    for (int r = 0; r < rows; ++r) {
        const T* xr = xv.data() + static_cast<long long>(r) * dim;
        const T* yr = yv.data() + static_cast<long long>(r) * dim;
        double dot = 0.0, nx2 = 0.0, ny2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            dot += static_cast<double>(xr[d]) * yr[d];
            nx2 += static_cast<double>(xr[d]) * xr[d];
            ny2 += static_cast<double>(yr[d]) * yr[d];
        }
        const double nx = std::max(std::sqrt(nx2), static_cast<double>(eps));
        const double ny = std::max(std::sqrt(ny2), static_cast<double>(eps));
        out->val[static_cast<size_t>(r)] = static_cast<T>(dot / (nx * ny));
    }
    if (out->requires_grad) {
        out->backward_fn = [rows, dim, eps](detail::Node<T>& self) {
            auto& px = *self.parents[0];
            auto& py = *self.parents[1];
            const bool gx = px.requires_grad;
            const bool gy = py.requires_grad;
            if (gx) px.ensure_grad();
            if (gy) py.ensure_grad();
            for (int r = 0; r < rows; ++r) {
                const T g = self.grad[static_cast<size_t>(r)];
                if (g == T(0)) continue;
                const T* xr = px.val.data() + static_cast<long long>(r) * dim;
                const T* yr = py.val.data() + static_cast<long long>(r) * dim;
                double dot = 0.0, nx2 = 0.0, ny2 = 0.0;
                for (int d = 0; d < dim; ++d) {
                    dot += static_cast<double>(xr[d]) * yr[d];
                    nx2 += static_cast<double>(xr[d]) * xr[d];
                    ny2 += static_cast<double>(yr[d]) * yr[d];
                }
                const double nx = std::sqrt(nx2);
                const double ny = std::sqrt(ny2);
                const double nxc = std::max(nx, static_cast<double>(eps));
                const double nyc = std::max(ny, static_cast<double>(eps));
                const double cosv = dot / (nxc * nyc);
                const double inv = 1.0 / (nxc * nyc);
                // the clamped norm is constant below eps, so its branch
                // contributes no gradient there
                const double cx = nx > static_cast<double>(eps) ? cosv / nx2 : 0.0;
                const double cy = ny > static_cast<double>(eps) ? cosv / ny2 : 0.0;
                if (gx) {
                    T* gxr = px.grad.data() + static_cast<long long>(r) * dim;
                    for (int d = 0; d < dim; ++d) {
                        gxr[d] += g * static_cast<T>(yr[d] * inv - cx * xr[d]);
                    }
                }
                if (gy) {
                    T* gyr = py.grad.data() + static_cast<long long>(r) * dim;
                    for (int d = 0; d < dim; ++d) {
                        gyr[d] += g * static_cast<T>(xr[d] * inv - cy * yr[d]);
                    }
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    auto out = detail::make_node<T>(Shape4{1, 1, 1, 1}, {x.node_ptr()});
    double acc = 0.0;
    for (T v : x.value()) acc += static_cast<double>(v);
    out->val[0] = static_cast<T>(acc);
    if (out->requires_grad) {
        out->backward_fn = [](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            const T g = self.grad[0];
            for (auto& v : p.grad) v += g;
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> batched_matmul(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape4 as = a.shape();
    const Shape4 bs = b.shape();
    if (as.w != 1 || bs.w != 1 || as.n != bs.n || as.h != bs.c) {
        throw std::invalid_argument("batched_matmul: incompatible shapes " + as.str() +
                                    " x " + bs.str());
    }
    const int batch = as.n, M = as.c, K = as.h, N = bs.h;
    auto out = detail::make_node<T>(Shape4{batch, M, N, 1}, {a.node_ptr(), b.node_ptr()});
    const auto& av = a.value();
    const auto& bv = b.value();
    for (int i = 0; i < batch; ++i) {
        detail::gemm_ab(M, K, N, av.data() + static_cast<long long>(i) * M * K,
                        bv.data() + static_cast<long long>(i) * K * N,
                        out->val.data() + static_cast<long long>(i) * M * N);
    }
    if (out->requires_grad) {
        out->backward_fn = [batch, M, K, N](detail::Node<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            for (int i = 0; i < batch; ++i) {
                const T* gc = self.grad.data() + static_cast<long long>(i) * M * N;
                if (pa.requires_grad) {
                    pa.ensure_grad();
                    // dA = dC * B^T
                    detail::gemm_abt(M, N, K, gc,
                                     pb.val.data() + static_cast<long long>(i) * K * N,
                                     pa.grad.data() + static_cast<long long>(i) * M * K);
                }
                if (pb.requires_grad) {
                    pb.ensure_grad();
                    // dB = A^T * dC
                    detail::gemm_atb(M, K, N,
                                     pa.val.data() + static_cast<long long>(i) * M * K, gc,
                                     pb.grad.data() + static_cast<long long>(i) * K * N);
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

namespace {

// token index mapping shared by partition and merge
struct WindowMap {
    int n, c, h, w, win, nh, nw;
    long long windows() const { return static_cast<long long>(n) * nh * nw; }
    // flat image index for (window, token, channel)
    long long image_index(long long b, int t, int ch) const {
        const long long ni = b / (static_cast<long long>(nh) * nw);
        const long long rem = b % (static_cast<long long>(nh) * nw);
        const int wh = static_cast<int>(rem / nw);
        const int ww = static_cast<int>(rem % nw);
        const int ih = t / win;
        const int iw = t % win;
        return ((ni * c + ch) * static_cast<long long>(h) + (wh * win + ih)) * w +
               (ww * win + iw);
    }
};

WindowMap make_window_map(const Shape4& s, int window, const char* op) {
    if (window < 1 || s.h % window != 0 || s.w % window != 0) {
        throw std::invalid_argument(std::string(op) + ": window " + std::to_string(window) +
                                    " does not tile " + s.str());
    }
    return WindowMap{s.n, s.c, s.h, s.w, window, s.h / window, s.w / window};
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int window) {
    const WindowMap map = make_window_map(x.shape(), window, "window_partition");
    const int tokens = window * window;
    auto out = detail::make_node<T>(
        Shape4{static_cast<int>(map.windows()), tokens, map.c, 1}, {x.node_ptr()});
    const auto& xv = x.value();
    size_t o = 0;
    for (long long b = 0; b < map.windows(); ++b)
        for (int t = 0; t < tokens; ++t)
            for (int ch = 0; ch < map.c; ++ch)
                out->val[o++] = xv[static_cast<size_t>(map.image_index(b, t, ch))];
    if (out->requires_grad) {
        out->backward_fn = [map, tokens](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            size_t o = 0;
            for (long long b = 0; b < map.windows(); ++b)
                for (int t = 0; t < tokens; ++t)
                    for (int ch = 0; ch < map.c; ++ch)
                        p.grad[static_cast<size_t>(map.image_index(b, t, ch))] += self.grad[o++];
        };
    }
    return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& tokens_t, int window, const Shape4& image_shape) {
    const WindowMap map = make_window_map(image_shape, window, "window_merge");
    const int tokens = window * window;
    const Shape4 ts = tokens_t.shape();
    if (ts.n != map.windows() || ts.c != tokens || ts.h != map.c || ts.w != 1) {
        throw std::invalid_argument("window_merge: token shape " + ts.str() +
                                    " does not match image " + image_shape.str());
    }
    auto out = detail::make_node<T>(image_shape, {tokens_t.node_ptr()});
    const auto& tv = tokens_t.value();
    size_t i = 0;
    for (long long b = 0; b < map.windows(); ++b)
        for (int t = 0; t < tokens; ++t)
            for (int ch = 0; ch < map.c; ++ch)
                out->val[static_cast<size_t>(map.image_index(b, t, ch))] = tv[i++];
    if (out->requires_grad) {
        out->backward_fn = [map, tokens](detail::Node<T>& self) {
            auto& p = *self.parents[0];
            p.ensure_grad();
            size_t i = 0;
            for (long long b = 0; b < map.windows(); ++b)
                for (int t = 0; t < tokens; ++t)
                    for (int ch = 0; ch < map.c; ++ch)
                        p.grad[i++] += self.grad[static_cast<size_t>(map.image_index(b, t, ch))];
        };
    }
    return Tensor<T>::from_node(out);
}

#define LEXCD_INSTANTIATE_OPS(T)                                                        \
    template Tensor<T> permute<T>(const Tensor<T>&, const std::array<int, 4>&);         \
    template Tensor<T> reshape<T>(const Tensor<T>&, const std::vector<long long>&);     \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                    \
    template Tensor<T> relu<T>(const Tensor<T>&);                                       \
    template Tensor<T> affine<T>(const Tensor<T>&, T, T);                               \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                            \
    template Tensor<T> bilinear_upsample<T>(const Tensor<T>&, int);                     \
    template Tensor<T> softmax_channels<T>(const Tensor<T>&);                           \
    template Tensor<T> cross_entropy<T>(const Tensor<T>&, const Mask&);                 \
    template Tensor<T> row_cosine<T>(const Tensor<T>&, const Tensor<T>&, T);            \
    template Tensor<T> sum<T>(const Tensor<T>&);                                        \
    template Tensor<T> batched_matmul<T>(const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> window_partition<T>(const Tensor<T>&, int);                      \
    template Tensor<T> window_merge<T>(const Tensor<T>&, int, const Shape4&);

LEXCD_INSTANTIATE_OPS(float)
LEXCD_INSTANTIATE_OPS(double)
#undef LEXCD_INSTANTIATE_OPS

}  // namespace lexcd
