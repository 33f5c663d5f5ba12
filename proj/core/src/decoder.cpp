#include "lexcd/decoder.hpp"

namespace lexcd {

namespace {

template <typename T>
RefineParams<T> make_refine(ParamStore<T>& store, const std::string& name,
                            const DecoderConfig& cfg, int width, Rng& rng) {
    RefineParams<T> p;
    if (cfg.refine == "winattn") {
        p.attn = make_window_attention(store, name, width, cfg.attn_window, rng);
    } else {
        p.conv = make_conv_block(store, name, width, 3, rng);
    }
    return p;
}

template <typename T>
Tensor<T> apply_refine(const Tensor<T>& x, const RefineParams<T>& p) {
    if (p.attn) return window_attention(x, *p.attn);
    return residual_conv_block(x, *p.conv);
}

template <typename T>
Conv2dParams<T> make_head(ParamStore<T>& store, const std::string& name, int cin, Rng& rng) {
    return make_conv(store, name, 2, cin, 1, rng, 1, 0, /*gain=*/0.2);
}

}  // namespace

template <typename T>
LedParams<T> make_led(ParamStore<T>& store, const DecoderConfig& cfg, int width, Rng& rng) {
    LedParams<T> p;
    for (int k = 0; k < 4; ++k) {
        auto& lvl = p.levels[static_cast<size_t>(k)];
        const std::string base = "led.level" + std::to_string(k + 1);
        lvl.has_fuse = (k != 3);
        if (lvl.has_fuse) {
            lvl.fuse_a = make_conv(store, base + ".fuse_a", width, 2 * width, 1, rng);
            lvl.fuse_b = cfg.tied_streams
                             ? lvl.fuse_a
                             : make_conv(store, base + ".fuse_b", width, 2 * width, 1, rng);
        }
        lvl.refine_a = make_refine(store, base + ".refine_a", cfg, width, rng);
        lvl.refine_b = cfg.tied_streams ? lvl.refine_a
                                        : make_refine(store, base + ".refine_b", cfg, width, rng);
        lvl.cross_a = make_conv(store, base + ".cross_a", width, width, 1, rng);
        lvl.cross_b = cfg.tied_streams ? lvl.cross_a
                                       : make_conv(store, base + ".cross_b", width, width, 1, rng);
        lvl.attn_a = make_channel_attention(store, base + ".attn_a", width, cfg.squeeze_ratio, rng);
        lvl.attn_b = cfg.tied_streams
                         ? lvl.attn_a
                         : make_channel_attention(store, base + ".attn_b", width,
                                                  cfg.squeeze_ratio, rng);
        lvl.csdw = make_csdw(store, base + ".csdw", width, cfg.csdw_kernel,
                             cfg.csdw_shared_conv || cfg.tied_streams, rng);
    }
    for (int k = 0; k < 3; ++k) {
        p.aux_heads[static_cast<size_t>(k)] =
            make_head(store, "led.aux_head" + std::to_string(k + 1), 2 * width, rng);
    }
    p.main_head = make_head(store, "led.main_head", 2 * width, rng);
    return p;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> layer_exchange(const Tensor<T>& x_a, const Tensor<T>& x_b,
                                               const Tensor<T>& prev_a, const Tensor<T>& prev_b,
                                               const Conv2dParams<T>& fuse_a,
                                               const Conv2dParams<T>& fuse_b) {
    if (!prev_a.defined() && !prev_b.defined()) {
        return {x_a, x_b};
    }
    if (!prev_a.defined() || !prev_b.defined()) {
        throw std::invalid_argument("layer_exchange: both prev streams must be given");
    }
    if (!(x_a.shape() == x_b.shape()) || !(prev_a.shape() == x_a.shape()) ||
        !(prev_b.shape() == x_a.shape())) {
        throw std::invalid_argument("layer_exchange: all four inputs must share one shape; got " +
                                    x_a.shape().str() + ", " + x_b.shape().str() + ", " +
                                    prev_a.shape().str() + ", " + prev_b.shape().str());
    }
    return {apply_conv(concat_channels(x_a, prev_b), fuse_a),
            apply_conv(concat_channels(x_b, prev_a), fuse_b)};
}

template <typename T>
LedLevelOut<T> led_level(const Tensor<T>& x_a, const Tensor<T>& x_b, const Tensor<T>& prev_a,
                         const Tensor<T>& prev_b, const LedLevelParams<T>& params) {
    auto [ea, eb] = layer_exchange(x_a, x_b, prev_a, prev_b, params.fuse_a, params.fuse_b);
    Tensor<T> ra = apply_refine(ea, params.refine_a);
    Tensor<T> rb = apply_refine(eb, params.refine_b);
    // residual fusion exchanges the refined maps once more
    Tensor<T> fa = add(ra, apply_conv(rb, params.cross_a));
    Tensor<T> fb = add(rb, apply_conv(ra, params.cross_b));
    fa = channel_attention(fa, params.attn_a);
    fb = channel_attention(fb, params.attn_b);
    CsdwOut<T> cs = csdw_forward(fa, fb, params.csdw);
    LedLevelOut<T> out;
    out.out_a = cs.out_a;
    out.out_b = cs.out_b;
    out.aux_pair = concat_channels(cs.out_a, cs.out_b);
    return out;
}

template <typename T>
DecodeOutput<T> decode(const PyramidPair<T>& pyr, const LedParams<T>& params) {
    for (int k = 0; k < 4; ++k) {
        if (!pyr.a[static_cast<size_t>(k)].defined() || !pyr.b[static_cast<size_t>(k)].defined()) {
            throw std::invalid_argument("decode: pyramid level " + std::to_string(k + 1) +
                                        " is undefined");
        }
    }
    DecodeOutput<T> out;
    out.aux_logits.resize(3);
    Tensor<T> prev_a, prev_b;
    for (int k = 3; k >= 0; --k) {
        LedLevelOut<T> lvl = led_level(pyr.a[static_cast<size_t>(k)], pyr.b[static_cast<size_t>(k)],
                                       prev_a, prev_b, params.levels[static_cast<size_t>(k)]);
        if (k > 0) {
            prev_a = bilinear_upsample(lvl.out_a, 2);
            prev_b = bilinear_upsample(lvl.out_b, 2);
            // auxiliary supervision attaches where the level's output enters
            // the next-finer level
            out.aux_logits[static_cast<size_t>(k - 1)] =
                apply_conv(concat_channels(prev_a, prev_b), params.aux_heads[static_cast<size_t>(k - 1)]);
        } else {
            out.main_logits = bilinear_upsample(apply_conv(lvl.aux_pair, params.main_head), 4);
        }
    }
    return out;
}

template <typename T>
BaselineDecoderParams<T> make_baseline_decoder(ParamStore<T>& store, int width, Rng& rng) {
    BaselineDecoderParams<T> p;
    for (int k = 0; k < 3; ++k) {
        p.fuse[static_cast<size_t>(k)] =
            make_conv(store, "decoder.fuse" + std::to_string(k + 1), width, 2 * width, 1, rng);
        p.aux_heads[static_cast<size_t>(k)] =
            make_head(store, "decoder.aux_head" + std::to_string(k + 1), 2 * width, rng);
    }
    p.main_head = make_head(store, "decoder.main_head", 2 * width, rng);
    return p;
}

template <typename T>
DecodeOutput<T> decode_baseline(const PyramidPair<T>& pyr, const BaselineDecoderParams<T>& params) {
    DecodeOutput<T> out;
    out.aux_logits.resize(3);
    Tensor<T> sa = pyr.a[3];
    Tensor<T> sb = pyr.b[3];
    Tensor<T> ua, ub;  // previous level's streams, upsampled x2
    for (int k = 3; k >= 0; --k) {
        if (k < 3) {
            const auto& fuse = params.fuse[static_cast<size_t>(k)];
            sa = relu(apply_conv(concat_channels(ua, pyr.a[static_cast<size_t>(k)]), fuse));
            sb = relu(apply_conv(concat_channels(ub, pyr.b[static_cast<size_t>(k)]), fuse));
        }
        if (k > 0) {
            ua = bilinear_upsample(sa, 2);
            ub = bilinear_upsample(sb, 2);
            out.aux_logits[static_cast<size_t>(k - 1)] = apply_conv(
                concat_channels(ua, ub), params.aux_heads[static_cast<size_t>(k - 1)]);
        } else {
            out.main_logits =
                bilinear_upsample(apply_conv(concat_channels(sa, sb), params.main_head), 4);
        }
    }
    return out;
}

template <typename T>
Tensor<T> total_loss(const DecodeOutput<T>& out, const Mask& target, double aux_weight) {
    Tensor<T> loss = cross_entropy(out.main_logits, target);
    if (out.aux_logits.empty() || aux_weight == 0.0) return loss;
    Tensor<T> aux_sum;
    for (const auto& aux : out.aux_logits) {
        const Shape4 s = aux.shape();
        if (target.h % s.h != 0 || target.w % s.w != 0 || target.h / s.h != target.w / s.w) {
            throw std::invalid_argument("total_loss: aux logits " + s.str() +
                                        " incompatible with target " + target.shape_str());
        }
        Tensor<T> ce = cross_entropy(aux, downsample_mask(target, target.h / s.h));
        aux_sum = aux_sum.defined() ? add(aux_sum, ce) : ce;
    }
    return add(loss, affine(aux_sum, static_cast<T>(aux_weight), T(0)));
}

#define LEXCD_INSTANTIATE_DECODER(T)                                                        \
    template LedParams<T> make_led<T>(ParamStore<T>&, const DecoderConfig&, int, Rng&);      \
    template std::pair<Tensor<T>, Tensor<T>> layer_exchange<T>(                             \
        const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
        const Conv2dParams<T>&, const Conv2dParams<T>&);                                    \
    template LedLevelOut<T> led_level<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                         const Tensor<T>&, const LedLevelParams<T>&);       \
    template DecodeOutput<T> decode<T>(const PyramidPair<T>&, const LedParams<T>&);         \
    template BaselineDecoderParams<T> make_baseline_decoder<T>(ParamStore<T>&, int, Rng&);  \
    template DecodeOutput<T> decode_baseline<T>(const PyramidPair<T>&,                      \
                                                const BaselineDecoderParams<T>&);           \
    template Tensor<T> total_loss<T>(const DecodeOutput<T>&, const Mask&, double);

LEXCD_INSTANTIATE_DECODER(float)
LEXCD_INSTANTIATE_DECODER(double)
#undef LEXCD_INSTANTIATE_DECODER

}  // namespace lexcd
