#pragma once

#include <array>
#include <vector>

#include "lexcd/mask.hpp"
#include "lexcd/tensor.hpp"

// Differentiable op set of the model core. Every op records a backward
// closure on the output node; kernels are deterministic (fixed accumulation
// order, parallel loops only over disjoint output slices).
namespace lexcd {

// Axis permutation; out[i0,i1,i2,i3] = x[index with axis k at position perm^-1(k)].
// perm lists, for each output axis, the source axis it takes.
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::array<int, 4>& perm);

// Row-major reshape. dims may contain one -1 which is inferred; fewer than 4
// dims are padded with trailing 1s.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const std::vector<long long>& dims);

template <typename T>
Tensor<T> permute_reshape(const Tensor<T>& x, const std::array<int, 4>& perm,
                          const std::vector<long long>& dims) {
    return reshape(permute(x, perm), dims);
}

// Cross-correlation with square kernels; weight (Cout,Cin,k,k), bias (Cout).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride = 1, int padding = 0);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// scale * x + shift, elementwise.
template <typename T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift);

// Elementwise with broadcasting over size-1 axes.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

// Integer-factor bilinear upsample, align-corners=false convention.
template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int factor);

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x);

// Mean over all pixels of -log softmax probability of the target class.
// Logits (N,C,H,W) with C >= 2; target values must be in {0,1}.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Mask& target);

// Per-row cosine between (R,D) matrices (stored as (R,D,1,1)):
// dot / (max(|x|,eps) * max(|y|,eps)). Returns (R,1,1,1).
template <typename T>
Tensor<T> row_cosine(const Tensor<T>& x, const Tensor<T>& y, T eps);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

// (B,M,K,1) x (B,K,N,1) -> (B,M,N,1).
template <typename T>
Tensor<T> batched_matmul(const Tensor<T>& a, const Tensor<T>& b);

// (N,C,H,W) -> (N*(H/m)*(W/m), m*m, C, 1) token windows and back.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int window);
template <typename T>
Tensor<T> window_merge(const Tensor<T>& tokens, int window, const Shape4& image_shape);

// Default epsilon used by every cosine in the model.
inline constexpr double kCosineEps = 1e-8;

}  // namespace lexcd
