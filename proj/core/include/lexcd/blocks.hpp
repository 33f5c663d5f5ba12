#pragma once

#include <cmath>
#include <string>

#include "lexcd/ops.hpp"
#include "lexcd/param_store.hpp"
#include "lexcd/rng.hpp"

namespace lexcd {

template <typename T>
struct Conv2dParams {
    Tensor<T> w;
    Tensor<T> b;
    int stride = 1;
    int pad = 0;
};

// He-uniform weights scaled by gain, zero bias. gain 0 zero-initializes the
// weights (residual branches start as the identity).
template <typename T>
Conv2dParams<T> make_conv(ParamStore<T>& store, const std::string& name, int cout, int cin,
                          int k, Rng& rng, int stride = 1, int pad = 0, double gain = 1.0) {
    const double bound = gain * std::sqrt(6.0 / (static_cast<double>(cin) * k * k));
    std::vector<T> w(static_cast<size_t>(cout) * cin * k * k);
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
    Conv2dParams<T> p;
    p.w = store.add(name + ".w", Tensor<T>::from_vector(Shape4{cout, cin, k, k}, std::move(w),
                                                        /*requires_grad=*/true));
    p.b = store.add(name + ".b", Tensor<T>::zeros(Shape4{cout, 1, 1, 1}, true));
    p.stride = stride;
    p.pad = pad;
    return p;
}

template <typename T>
Tensor<T> apply_conv(const Tensor<T>& x, const Conv2dParams<T>& p) {
    return conv2d(x, p.w, p.b, p.stride, p.pad);
}

// conv -> ReLU -> conv, channel- and shape-preserving.
template <typename T>
struct ConvBlockParams {
    Conv2dParams<T> c1;
    Conv2dParams<T> c2;
};

template <typename T>
ConvBlockParams<T> make_conv_block(ParamStore<T>& store, const std::string& name,
                                   int channels, int k, Rng& rng) {
    ConvBlockParams<T> p;
    p.c1 = make_conv(store, name + ".c1", channels, channels, k, rng, 1, k / 2);
    // zero gain: every residual/weighting branch starts as a no-op
    p.c2 = make_conv(store, name + ".c2", channels, channels, k, rng, 1, k / 2, 0.0);
    return p;
}

template <typename T>
Tensor<T> conv_block(const Tensor<T>& x, const ConvBlockParams<T>& p) {
    return apply_conv(relu(apply_conv(x, p.c1)), p.c2);
}

// x + conv_block(x)
template <typename T>
Tensor<T> residual_conv_block(const Tensor<T>& x, const ConvBlockParams<T>& p) {
    return add(x, conv_block(x, p));
}

// Squeeze-excite gate: sigmoid(W2 relu(W1 gap(x))) broadcast over space.
template <typename T>
struct ChannelAttentionParams {
    Conv2dParams<T> squeeze;
    Conv2dParams<T> excite;
};

template <typename T>
ChannelAttentionParams<T> make_channel_attention(ParamStore<T>& store, const std::string& name,
                                                 int channels, int squeeze_ratio, Rng& rng) {
    if (squeeze_ratio < 1 || channels % squeeze_ratio != 0) {
        throw std::invalid_argument("channel_attention: channels " + std::to_string(channels) +
                                    " not divisible by squeeze ratio " +
                                    std::to_string(squeeze_ratio));
    }
    ChannelAttentionParams<T> p;
    p.squeeze = make_conv(store, name + ".squeeze", channels / squeeze_ratio, channels, 1, rng);
    p.excite = make_conv(store, name + ".excite", channels, channels / squeeze_ratio, 1, rng);
    return p;
}

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const ChannelAttentionParams<T>& p) {
    Tensor<T> gate = sigmoid(apply_conv(relu(apply_conv(global_avg_pool(x), p.squeeze)), p.excite));
    return mul(x, gate);
}

// Single-head windowed self-attention + MLP, both with residual connections.
// The effective window is the largest divisor of both spatial dims that does
// not exceed the configured size.
template <typename T>
struct WindowAttentionParams {
    Conv2dParams<T> q, k, v, proj, mlp1, mlp2;
    int window = 4;
};

template <typename T>
WindowAttentionParams<T> make_window_attention(ParamStore<T>& store, const std::string& name,
                                               int channels, int window, Rng& rng) {
    WindowAttentionParams<T> p;
    p.q = make_conv(store, name + ".q", channels, channels, 1, rng);
    p.k = make_conv(store, name + ".k", channels, channels, 1, rng);
    p.v = make_conv(store, name + ".v", channels, channels, 1, rng);
    p.proj = make_conv(store, name + ".proj", channels, channels, 1, rng);
    p.mlp1 = make_conv(store, name + ".mlp1", channels * 2, channels, 1, rng);
    p.mlp2 = make_conv(store, name + ".mlp2", channels, channels * 2, 1, rng);
    p.window = window;
    return p;
}

inline int effective_window(int configured, int h, int w) {
    int win = 1;
    for (int cand = 1; cand <= configured; ++cand) {
        if (h % cand == 0 && w % cand == 0) win = cand;
    }
    return win;
}

template <typename T>
Tensor<T> window_attention(const Tensor<T>& x, const WindowAttentionParams<T>& p) {
    const Shape4 s = x.shape();
    const int win = effective_window(p.window, s.h, s.w);
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(s.c)));

    Tensor<T> q = window_partition(apply_conv(x, p.q), win);  // (B, M, C, 1)
    Tensor<T> k = window_partition(apply_conv(x, p.k), win);
    Tensor<T> v = window_partition(apply_conv(x, p.v), win);

    Tensor<T> scores = batched_matmul(affine(q, scale, T(0)),
                                      permute(k, {0, 2, 1, 3}));  // (B, M, M, 1)
    // softmax over keys: move the key axis to the channel slot and back
    Tensor<T> attn = permute(softmax_channels(permute(scores, {0, 2, 1, 3})), {0, 2, 1, 3});
    Tensor<T> mixed = window_merge(batched_matmul(attn, v), win, s);
    Tensor<T> y = add(x, apply_conv(mixed, p.proj));
    return add(y, apply_conv(relu(apply_conv(y, p.mlp1)), p.mlp2));
}

}  // namespace lexcd
