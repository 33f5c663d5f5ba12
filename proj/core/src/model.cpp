#include "lexcd/model.hpp"

namespace lexcd {

template <typename T>
ChangeModel<T>::ChangeModel(const RunConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(Rng::mix(cfg_.seed, 0x6d6f64656cULL));
    encoder_ = make_encoder(store_, cfg_.encoder, rng);
    fpn_ = make_fpn(store_, cfg_.fpn, cfg_.encoder.widths, rng);
    if (cfg_.decoder.led) {
        led_ = make_led(store_, cfg_.decoder, cfg_.fpn.width, rng);
    } else {
        baseline_ = make_baseline_decoder(store_, cfg_.fpn.width, rng);
    }
}

template <typename T>
PyramidPair<T> ChangeModel<T>::encode(const Tensor<T>& img_a, const Tensor<T>& img_b) const {
    return encode_pair(img_a, img_b, cfg_.encoder, encoder_);
}

template <typename T>
DecodeOutput<T> ChangeModel<T>::forward(const Tensor<T>& img_a, const Tensor<T>& img_b) const {
    PyramidPair<T> pyr = fpn_exchange(encode(img_a, img_b), cfg_.fpn, fpn_);
    return led_ ? decode(pyr, *led_) : decode_baseline(pyr, *baseline_);
}

template <typename T>
Tensor<T> ChangeModel<T>::loss(const DecodeOutput<T>& out, const Mask& target) const {
    return total_loss(out, target, cfg_.decoder.aux_weight);
}

template <typename T>
Mask logits_to_mask(const Tensor<T>& logits) {
    const Shape4 s = logits.shape();
    if (s.c != 2) throw std::invalid_argument("logits_to_mask: expected 2 classes, got " + s.str());
    Mask m(s.n, s.h, s.w);
    const auto& v = logits.value();
    const long long plane = static_cast<long long>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
        const T* z0 = v.data() + n * 2 * plane;
        const T* z1 = z0 + plane;
        uint8_t* out = m.v.data() + n * plane;
        for (long long i = 0; i < plane; ++i) out[i] = z1[i] > z0[i] ? 1 : 0;
    }
    return m;
}

template <typename T>
Mask ChangeModel<T>::predict(const Tensor<T>& img_a, const Tensor<T>& img_b) const {
    return logits_to_mask(forward(img_a, img_b).main_logits);
}

template class ChangeModel<float>;
template class ChangeModel<double>;
template Mask logits_to_mask<float>(const Tensor<float>&);
template Mask logits_to_mask<double>(const Tensor<double>&);

}  // namespace lexcd
