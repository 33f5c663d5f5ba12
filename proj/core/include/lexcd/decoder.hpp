#pragma once

#include <optional>
#include <vector>

#include "lexcd/fpn.hpp"
#include "lexcd/mask.hpp"

namespace lexcd {

// Binary change logits: main head at input resolution plus one auxiliary
// head per non-finest level, ordered finest-first.
template <typename T>
struct DecodeOutput {
    Tensor<T> main_logits;               // (N,2,H,W)
    std::vector<Tensor<T>> aux_logits;   // (N,2,H/4,W/4), (N,2,H/8,W/8), (N,2,H/16,W/16)
};

template <typename T>
struct RefineParams {
    std::optional<ConvBlockParams<T>> conv;
    std::optional<WindowAttentionParams<T>> attn;
};

template <typename T>
struct LedLevelParams {
    bool has_fuse = false;            // false at the coarsest level (no prev streams)
    Conv2dParams<T> fuse_a, fuse_b;   // 1x1 on channel concat, back to width
    RefineParams<T> refine_a, refine_b;
    Conv2dParams<T> cross_a, cross_b;  // 1x1 on the cross-stream residual term
    ChannelAttentionParams<T> attn_a, attn_b;
    CsdwParams<T> csdw;
};

template <typename T>
struct LedParams {
    std::array<LedLevelParams<T>, 4> levels;  // index 0 = finest
    std::array<Conv2dParams<T>, 3> aux_heads;  // for levels 1..3, finest-first
    Conv2dParams<T> main_head;
};

template <typename T>
LedParams<T> make_led(ParamStore<T>& store, const DecoderConfig& cfg, int width, Rng& rng);

// Cross-wiring fusion with the previous (upsampled) decoder level:
// x_a_new = fuse_a(concat(x_a, prev_b)), x_b_new = fuse_b(concat(x_b, prev_a)).
// Undefined prev tensors (coarsest level) leave the streams untouched.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> layer_exchange(const Tensor<T>& x_a, const Tensor<T>& x_b,
                                               const Tensor<T>& prev_a, const Tensor<T>& prev_b,
                                               const Conv2dParams<T>& fuse_a,
                                               const Conv2dParams<T>& fuse_b);

template <typename T>
struct LedLevelOut {
    Tensor<T> out_a;
    Tensor<T> out_b;
    Tensor<T> aux_pair;  // channel-concat(out_a, out_b) at level resolution
};

// One decoder level: layer exchange -> per-stream refinement -> residual
// exchange fusion -> channel attention -> CSDW re-weighting.
template <typename T>
LedLevelOut<T> led_level(const Tensor<T>& x_a, const Tensor<T>& x_b, const Tensor<T>& prev_a,
                         const Tensor<T>& prev_b, const LedLevelParams<T>& params);

template <typename T>
DecodeOutput<T> decode(const PyramidPair<T>& pyr, const LedParams<T>& params);

// Plain layer-by-layer upsample decoder used when the layer-exchange decoder
// is disabled; emits the same DecodeOutput contract.
template <typename T>
struct BaselineDecoderParams {
    std::array<Conv2dParams<T>, 3> fuse;  // shared between streams, finest-first
    std::array<Conv2dParams<T>, 3> aux_heads;
    Conv2dParams<T> main_head;
};

template <typename T>
BaselineDecoderParams<T> make_baseline_decoder(ParamStore<T>& store, int width, Rng& rng);

template <typename T>
DecodeOutput<T> decode_baseline(const PyramidPair<T>& pyr, const BaselineDecoderParams<T>& params);

// CE(main, target) + aux_weight * sum over levels of CE(aux_l, target_l),
// aux targets by nearest-neighbour downsampling.
template <typename T>
Tensor<T> total_loss(const DecodeOutput<T>& out, const Mask& target, double aux_weight = 0.3);

}  // namespace lexcd
