#include "lexcd/encoder.hpp"

namespace lexcd {

template <typename T>
EncoderParams<T> make_encoder(ParamStore<T>& store, const EncoderConfig& cfg, Rng& rng) {
    EncoderParams<T> p;
    p.stem = make_conv(store, "encoder.stem", cfg.stem_width, 3, 3, rng, /*stride=*/2,
                       /*pad=*/1);
    int cin = cfg.stem_width;
    for (int s = 0; s < 4; ++s) {
        auto& stage = p.stages[static_cast<size_t>(s)];
        const int width = cfg.widths[static_cast<size_t>(s)];
        const std::string base = "encoder.stage" + std::to_string(s + 1);
        stage.down = make_conv(store, base + ".down", width, cin, 3, rng, 2, 1);
        for (int b = 0; b < cfg.blocks_per_stage; ++b) {
            stage.blocks.push_back(
                make_conv_block(store, base + ".block" + std::to_string(b + 1), width, 3, rng));
        }
        if (cfg.refine == "winattn") {
            stage.attn = make_window_attention(store, base + ".attn", width, cfg.attn_window, rng);
        }
        if (cfg.csdw_per_level && cfg.csdw_levels[static_cast<size_t>(s)]) {
            stage.csdw = make_csdw(store, base + ".csdw", width, cfg.csdw_kernel,
                                   cfg.csdw_shared_conv, rng);
        }
        cin = width;
    }
    return p;
}

template <typename T>
Tensor<T> encoder_stage(const Tensor<T>& x, const EncoderStageParams<T>& stage) {
    Tensor<T> y = relu(apply_conv(x, stage.down));
    for (const auto& block : stage.blocks) y = residual_conv_block(y, block);
    if (stage.attn) y = window_attention(y, *stage.attn);
    return y;
}

template <typename T>
PyramidPair<T> encode_pair(const Tensor<T>& img_a, const Tensor<T>& img_b,
                           const EncoderConfig& cfg, const EncoderParams<T>& params) {
    const Shape4 s = img_a.shape();
    if (!(s == img_b.shape())) {
        throw std::invalid_argument("encode_pair: image shapes " + s.str() + " and " +
                                    img_b.shape().str() + " differ");
    }
    if (s.c != 3) {
        throw std::invalid_argument("encode_pair: expected 3-channel input, got " + s.str());
    }
    if (s.h % 32 != 0 || s.w % 32 != 0) {
        throw std::invalid_argument("encode_pair: spatial dims of " + s.str() +
                                    " must be multiples of 32");
    }

    Tensor<T> xa = relu(apply_conv(img_a, params.stem));
    Tensor<T> xb = relu(apply_conv(img_b, params.stem));
    PyramidPair<T> pyr;
    for (int k = 0; k < 4; ++k) {
        const auto& stage = params.stages[static_cast<size_t>(k)];
        xa = encoder_stage(xa, stage);
        xb = encoder_stage(xb, stage);
        if (stage.csdw) {
            CsdwOut<T> out = csdw_forward(xa, xb, *stage.csdw);
            xa = out.out_a;
            xb = out.out_b;
        }
        pyr.a[static_cast<size_t>(k)] = xa;
        pyr.b[static_cast<size_t>(k)] = xb;
    }
    return pyr;
}

#define LEXCD_INSTANTIATE_ENCODER(T)                                                   \
    template EncoderParams<T> make_encoder<T>(ParamStore<T>&, const EncoderConfig&, Rng&); \
    template Tensor<T> encoder_stage<T>(const Tensor<T>&, const EncoderStageParams<T>&);   \
    template PyramidPair<T> encode_pair<T>(const Tensor<T>&, const Tensor<T>&,             \
                                           const EncoderConfig&, const EncoderParams<T>&);

LEXCD_INSTANTIATE_ENCODER(float)
LEXCD_INSTANTIATE_ENCODER(double)
#undef LEXCD_INSTANTIATE_ENCODER

}  // namespace lexcd
