#include "lexcd/csdw.hpp"

namespace lexcd {

namespace {

template <typename T>
void check_pair(const Tensor<T>& f_a, const Tensor<T>& f_b, const char* op) {
    if (!(f_a.shape() == f_b.shape())) {
        throw std::invalid_argument(std::string(op) + ": temporal shapes " +
                                    f_a.shape().str() + " and " + f_b.shape().str() +
                                    " differ");
    }
}

}  // namespace

template <typename T>
Tensor<T> channel_similarity_map(const Tensor<T>& f_a, const Tensor<T>& f_b, T eps) {
    check_pair(f_a, f_b, "channel_similarity_map");
    const Shape4 s = f_a.shape();
    // (N,C,H,W) -> (N,H,W,C) -> (N*H*W, C) rows of per-pixel channel vectors
    Tensor<T> rows_a = permute_reshape(f_a, {0, 2, 3, 1}, {-1, s.c});
    Tensor<T> rows_b = permute_reshape(f_b, {0, 2, 3, 1}, {-1, s.c});
    Tensor<T> cos = row_cosine(rows_a, rows_b, eps);
    return reshape(cos, {s.n, 1, s.h, s.w});
}

template <typename T>
Tensor<T> spatial_similarity_vector(const Tensor<T>& f_a, const Tensor<T>& f_b, T eps) {
    check_pair(f_a, f_b, "spatial_similarity_vector");
    const Shape4 s = f_a.shape();
    // (N,C,H,W) -> (N*C, H*W) rows of flattened spatial maps
    Tensor<T> rows_a = reshape(f_a, {static_cast<long long>(s.n) * s.c, -1});
    Tensor<T> rows_b = reshape(f_b, {static_cast<long long>(s.n) * s.c, -1});
    Tensor<T> cos = row_cosine(rows_a, rows_b, eps);
    return reshape(cos, {s.n, s.c, 1, 1});
}

template <typename T>
CsdwWeights<T> change_weight(const Tensor<T>& f_a, const Tensor<T>& f_b, T eps) {
    CsdwWeights<T> w;
    w.channel_cos = channel_similarity_map(f_a, f_b, eps);
    w.spatial_cos = spatial_similarity_vector(f_a, f_b, eps);
    w.channel_weight = affine(sigmoid(w.channel_cos), T(-1), T(1));
    w.spatial_weight = affine(sigmoid(w.spatial_cos), T(-1), T(1));
    w.weight = mul(w.channel_weight, w.spatial_weight);
    return w;
}

template <typename T>
CsdwOut<T> csdw_forward(const Tensor<T>& f_a, const Tensor<T>& f_b, const CsdwParams<T>& params,
                        T eps) {
    CsdwOut<T> out;
    out.weights = change_weight(f_a, f_b, eps);
    out.out_a = add(conv_block(mul(out.weights.weight, f_a), params.conv_a), f_a);
    out.out_b = add(conv_block(mul(out.weights.weight, f_b), params.conv_b), f_b);
    return out;
}

#define LEXCD_INSTANTIATE_CSDW(T)                                                         \
    template Tensor<T> channel_similarity_map<T>(const Tensor<T>&, const Tensor<T>&, T);  \
    template Tensor<T> spatial_similarity_vector<T>(const Tensor<T>&, const Tensor<T>&, T); \
    template CsdwWeights<T> change_weight<T>(const Tensor<T>&, const Tensor<T>&, T);      \
    template CsdwOut<T> csdw_forward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                        const CsdwParams<T>&, T);

LEXCD_INSTANTIATE_CSDW(float)
LEXCD_INSTANTIATE_CSDW(double)
#undef LEXCD_INSTANTIATE_CSDW

}  // namespace lexcd
