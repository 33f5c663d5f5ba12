#pragma once

#include <array>
#include <optional>

#include "lexcd/blocks.hpp"
#include "lexcd/config.hpp"
#include "lexcd/csdw.hpp"

namespace lexcd {

// Two aligned 4-level feature pyramids, index 0 = finest (stride 4) through
// index 3 = coarsest (stride 32).
template <typename T>
struct PyramidPair {
    std::array<Tensor<T>, 4> a;
    std::array<Tensor<T>, 4> b;
};

template <typename T>
struct EncoderStageParams {
    Conv2dParams<T> down;  // stride-2 3x3
    std::vector<ConvBlockParams<T>> blocks;
    std::optional<WindowAttentionParams<T>> attn;
    std::optional<CsdwParams<T>> csdw;
};

template <typename T>
struct EncoderParams {
    Conv2dParams<T> stem;  // stride-2, 3 -> stem_width
    std::array<EncoderStageParams<T>, 4> stages;
};

template <typename T>
EncoderParams<T> make_encoder(ParamStore<T>& store, const EncoderConfig& cfg, Rng& rng);

// One Siamese stage on a single stream (downsample + residual blocks +
// optional windowed attention), before any cross-temporal interaction.
template <typename T>
Tensor<T> encoder_stage(const Tensor<T>& x, const EncoderStageParams<T>& stage);

// Runs both images through the same weights; when enabled, csdw_forward is
// applied to each stage's output pair, feeding the next stage and the
// recorded level.
template <typename T>
PyramidPair<T> encode_pair(const Tensor<T>& img_a, const Tensor<T>& img_b,
                           const EncoderConfig& cfg, const EncoderParams<T>& params);

}  // namespace lexcd
