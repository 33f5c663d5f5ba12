#include <cstring>
#include <stdexcept>
#include <string>

#include "kernels.hpp"
#include "lexcd/ops.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lexcd {

namespace {

struct ConvDims {
    int cin, cout, k, stride, pad;
    int hin, win, hout, wout;
    long long kdim() const { return static_cast<long long>(cin) * k * k; }
    long long mdim() const { return static_cast<long long>(hout) * wout; }
};

ConvDims conv_dims(const Shape4& xs, const Shape4& ws, const Shape4& bs, int stride,
                   int padding) {
    if (ws.h != ws.w) throw std::invalid_argument("conv2d: kernels must be square");
    if (ws.c != xs.c) {
        throw std::invalid_argument("conv2d: input channels " + std::to_string(xs.c) +
                                    " do not match kernel Cin " + std::to_string(ws.c) +
                                    " (x " + xs.str() + ", weight " + ws.str() + ")");
    }
    if (bs.n != ws.n || bs.c != 1 || bs.h != 1 || bs.w != 1) {
        throw std::invalid_argument("conv2d: bias shape " + bs.str() +
                                    " must be (Cout,1,1,1) with Cout " + std::to_string(ws.n));
    }
    if (stride < 1 || padding < 0 || ws.h < 1) {
        throw std::invalid_argument("conv2d: need stride,k >= 1 and padding >= 0");
    }
    ConvDims d;
    d.cin = xs.c;
    d.cout = ws.n;
    d.k = ws.h;
    d.stride = stride;
    d.pad = padding;
    d.hin = xs.h;
    d.win = xs.w;
    d.hout = (xs.h + 2 * padding - ws.h) / stride + 1;
    d.wout = (xs.w + 2 * padding - ws.h) / stride + 1;
    if (xs.h + 2 * padding < ws.h || xs.w + 2 * padding < ws.h || d.hout < 1 || d.wout < 1) {
        throw std::invalid_argument("conv2d: non-positive output dims for input " + xs.str() +
                                    " with k=" + std::to_string(ws.h) +
                                    " stride=" + std::to_string(stride) +
                                    " pad=" + std::to_string(padding));
    }
    return d;
}

// col[(ci*k+kh)*k+kw, ho*Wo+wo] = x[ci, ho*s-p+kh, wo*s-p+kw] (0 outside).
template <typename T>
void im2col(const ConvDims& d, const T* x, T* col) {
    for (int ci = 0; ci < d.cin; ++ci) {
        const T* plane = x + static_cast<long long>(ci) * d.hin * d.win;
        for (int kh = 0; kh < d.k; ++kh)
            for (int kw = 0; kw < d.k; ++kw) {
                T* row = col + ((static_cast<long long>(ci) * d.k + kh) * d.k + kw) * d.mdim();
                for (int ho = 0; ho < d.hout; ++ho) {
                    const int h = ho * d.stride - d.pad + kh;
                    T* dst = row + static_cast<long long>(ho) * d.wout;
                    if (h < 0 || h >= d.hin) {
                        std::memset(dst, 0, sizeof(T) * static_cast<size_t>(d.wout));
                        continue;
                    }
                    const T* srcrow = plane + static_cast<long long>(h) * d.win;
                    for (int wo = 0; wo < d.wout; ++wo) {
                        const int w = wo * d.stride - d.pad + kw;
                        dst[wo] = (w >= 0 && w < d.win) ? srcrow[w] : T(0);
                    }
                }
            }
    }
}

template <typename T>
void col2im_add(const ConvDims& d, const T* col, T* x) {
    for (int ci = 0; ci < d.cin; ++ci) {
        T* plane = x + static_cast<long long>(ci) * d.hin * d.win;
        for (int kh = 0; kh < d.k; ++kh)
            for (int kw = 0; kw < d.k; ++kw) {
                const T* row = col + ((static_cast<long long>(ci) * d.k + kh) * d.k + kw) * d.mdim();
                for (int ho = 0; ho < d.hout; ++ho) {
                    const int h = ho * d.stride - d.pad + kh;
                    if (h < 0 || h >= d.hin) continue;
                    T* dstrow = plane + static_cast<long long>(h) * d.win;
                    const T* srcrow = row + static_cast<long long>(ho) * d.wout;
                    for (int wo = 0; wo < d.wout; ++wo) {
                        const int w = wo * d.stride - d.pad + kw;
                        if (w >= 0 && w < d.win) dstrow[w] += srcrow[wo];
                    }
                }
            }
    }
}

template <typename T>
std::vector<T>& col_scratch() {
    static thread_local std::vector<T> buf;
    return buf;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int padding) {
    const Shape4 xs = x.shape();
    const ConvDims d = conv_dims(xs, weight.shape(), bias.shape(), stride, padding);
    const Shape4 os{xs.n, d.cout, d.hout, d.wout};
    auto out = detail::make_node<T>(os, {x.node_ptr(), weight.node_ptr(), bias.node_ptr()});

    const bool unit = (d.k == 1 && d.stride == 1 && d.pad == 0);
    const long long in_plane = static_cast<long long>(d.cin) * d.hin * d.win;
    const long long out_plane = static_cast<long long>(d.cout) * d.mdim();
    const T* xp = x.value().data();
    const T* wp = weight.value().data();
    const T* bp = bias.value().data();
    T* op = out->val.data();

#pragma omp parallel for schedule(static)
    for (int n = 0; n < xs.n; ++n) {
        const T* src = xp + n * in_plane;
        const T* col = src;
        if (!unit) {
            auto& scratch = col_scratch<T>();
            scratch.resize(static_cast<size_t>(d.kdim() * d.mdim()));
            im2col(d, src, scratch.data());
            col = scratch.data();
        }
        T* dst = op + n * out_plane;
        for (int co = 0; co < d.cout; ++co) {
            T* row = dst + static_cast<long long>(co) * d.mdim();
            const T b = bp[co];
            for (long long i = 0; i < d.mdim(); ++i) row[i] = b;
        }
        detail::gemm_ab(d.cout, static_cast<int>(d.kdim()), static_cast<int>(d.mdim()), wp,
                        col, dst);
    }

    if (out->requires_grad) {
        out->backward_fn = [d, xs, unit, in_plane, out_plane](detail::Node<T>& self) {
            auto& px = *self.parents[0];
            auto& pw = *self.parents[1];
            auto& pb = *self.parents[2];
            const bool need_dx = px.requires_grad;
            const bool need_dw = pw.requires_grad;
            const bool need_db = pb.requires_grad;
            if (need_dx) px.ensure_grad();
            if (need_dw) pw.ensure_grad();
            if (need_db) pb.ensure_grad();

            const long long kdim = d.kdim();
            const long long mdim = d.mdim();
            // per-sample weight-gradient partials, reduced in sample order so
            // results do not depend on the thread count
            std::vector<T> dw_partial;
            if (need_dw) dw_partial.assign(static_cast<size_t>(xs.n) * d.cout * kdim, T(0));

#pragma omp parallel for schedule(static)
            for (int n = 0; n < xs.n; ++n) {
                const T* gy = self.grad.data() + n * out_plane;
                if (need_dx) {
                    auto& dcol = col_scratch<T>();
                    dcol.assign(static_cast<size_t>(kdim * mdim), T(0));
                    // dcol = W^T * gy
                    detail::gemm_atb(d.cout, static_cast<int>(kdim), static_cast<int>(mdim),
                                     pw.val.data(), gy, dcol.data());
                    if (unit) {
                        T* dst = px.grad.data() + n * in_plane;
                        for (long long i = 0; i < kdim * mdim; ++i) dst[i] += dcol[i];
                    } else {
                        col2im_add(d, dcol.data(), px.grad.data() + n * in_plane);
                    }
                }
                if (need_dw) {
                    const T* src = px.val.data() + n * in_plane;
                    const T* col = src;
                    std::vector<T> colbuf;
                    if (!unit) {
                        colbuf.resize(static_cast<size_t>(kdim * mdim));
                        im2col(d, src, colbuf.data());
                        col = colbuf.data();
                    }
                    // dW_n = gy * col^T
                    detail::gemm_abt(d.cout, static_cast<int>(mdim), static_cast<int>(kdim),
                                     gy, col, dw_partial.data() + static_cast<long long>(n) * d.cout * kdim);
                }
            }

            if (need_dw) {
                for (int n = 0; n < xs.n; ++n) {
                    const T* part = dw_partial.data() + static_cast<long long>(n) * d.cout * kdim;
                    for (long long i = 0; i < static_cast<long long>(d.cout) * kdim; ++i) {
                        pw.grad[static_cast<size_t>(i)] += part[i];
                    }
                }
            }
            if (need_db) {
                for (int n = 0; n < xs.n; ++n) {
                    const T* gy = self.grad.data() + n * out_plane;
                    for (int co = 0; co < d.cout; ++co) {
                        double acc = 0.0;
                        const T* row = gy + static_cast<long long>(co) * mdim;
                        for (long long i = 0; i < mdim; ++i) acc += static_cast<double>(row[i]);
                        pb.grad[static_cast<size_t>(co)] += static_cast<T>(acc);
                    }
                }
            }
        };
    }
    return Tensor<T>::from_node(out);
}

template Tensor<float> conv2d<float>(const Tensor<float>&, const Tensor<float>&,
                                     const Tensor<float>&, int, int);
template Tensor<double> conv2d<double>(const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, int, int);

}  // namespace lexcd
