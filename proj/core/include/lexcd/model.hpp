#pragma once

#include <optional>

#include "lexcd/config.hpp"
#include "lexcd/decoder.hpp"

namespace lexcd {

// Full change-detection network: Siamese encoder with per-level CSDW,
// cross-temporal FPN with layer exchange, and either the layer-exchange
// decoder or the plain upsample baseline. Parameter creation order is fixed
// so seeded initialization is reproducible.
template <typename T>
class ChangeModel {
  public:
    explicit ChangeModel(const RunConfig& cfg);

    PyramidPair<T> encode(const Tensor<T>& img_a, const Tensor<T>& img_b) const;
    DecodeOutput<T> forward(const Tensor<T>& img_a, const Tensor<T>& img_b) const;
    Tensor<T> loss(const DecodeOutput<T>& out, const Mask& target) const;

    // argmax over the two classes of main_logits (change wins strict > ties to
    // background)
    Mask predict(const Tensor<T>& img_a, const Tensor<T>& img_b) const;

    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }
    const RunConfig& config() const { return cfg_; }

  private:
    RunConfig cfg_;
    ParamStore<T> store_;
    EncoderParams<T> encoder_;
    FpnParams<T> fpn_;
    std::optional<LedParams<T>> led_;
    std::optional<BaselineDecoderParams<T>> baseline_;
};

template <typename T>
Mask logits_to_mask(const Tensor<T>& logits);

extern template class ChangeModel<float>;
extern template class ChangeModel<double>;

}  // namespace lexcd
