#pragma once

#include "lexcd/blocks.hpp"
#include "lexcd/ops.hpp"

namespace lexcd {

// Channel-Spatial Difference Weighting: cosine similarity between the two
// temporal feature maps, taken per pixel across channels and per channel
// across space, turned into change weights 1 - sigmoid(cos) and applied as a
// residual-weighted convolution to each stream.

template <typename T>
struct CsdwParams {
    ConvBlockParams<T> conv_a;
    ConvBlockParams<T> conv_b;  // aliases conv_a when shared
    bool shared = false;
};

template <typename T>
CsdwParams<T> make_csdw(ParamStore<T>& store, const std::string& name, int channels, int k,
                        bool shared, Rng& rng) {
    CsdwParams<T> p;
    p.shared = shared;
    p.conv_a = make_conv_block(store, name + ".conv_a", channels, k, rng);
    p.conv_b = shared ? p.conv_a : make_conv_block(store, name + ".conv_b", channels, k, rng);
    return p;
}

// Intermediate products, kept for inspection and tests. Rank-3/2 results are
// carried with the broadcast axes already in place:
//   channel_cos    per-pixel cosine, (N,1,H,W)
//   spatial_cos    per-channel cosine, (N,C,1,1)
//   channel_weight 1 - sigmoid(channel_cos), (N,1,H,W)
//   spatial_weight 1 - sigmoid(spatial_cos), (N,C,1,1)
//   weight         channel_weight * spatial_weight, (N,C,H,W)
template <typename T>
struct CsdwWeights {
    Tensor<T> channel_cos;
    Tensor<T> spatial_cos;
    Tensor<T> channel_weight;
    Tensor<T> spatial_weight;
    Tensor<T> weight;
};

// Per-pixel cosine between the two channel vectors at each location.
template <typename T>
Tensor<T> channel_similarity_map(const Tensor<T>& f_a, const Tensor<T>& f_b,
                                 T eps = static_cast<T>(kCosineEps));

// Per-channel cosine between the two flattened spatial maps.
template <typename T>
Tensor<T> spatial_similarity_vector(const Tensor<T>& f_a, const Tensor<T>& f_b,
                                    T eps = static_cast<T>(kCosineEps));

template <typename T>
CsdwWeights<T> change_weight(const Tensor<T>& f_a, const Tensor<T>& f_b,
                             T eps = static_cast<T>(kCosineEps));

template <typename T>
struct CsdwOut {
    Tensor<T> out_a;
    Tensor<T> out_b;
    CsdwWeights<T> weights;
};

// out_i = Conv_i(weight * f_i) + f_i for both streams.
template <typename T>
CsdwOut<T> csdw_forward(const Tensor<T>& f_a, const Tensor<T>& f_b, const CsdwParams<T>& params,
                        T eps = static_cast<T>(kCosineEps));

}  // namespace lexcd
