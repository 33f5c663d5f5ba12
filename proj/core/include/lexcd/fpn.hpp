#pragma once

#include "lexcd/encoder.hpp"

namespace lexcd {

// Cross-temporal feature pyramid: per-level 1x1 laterals to a common width
// (weights shared between the temporal branches) and a top-down pathway that
// adds the upsampled coarser map. On exchange edges the top-down input of
// branch A comes from branch B and vice versa.
template <typename T>
struct FpnParams {
    std::array<Conv2dParams<T>, 4> lateral;
};

template <typename T>
FpnParams<T> make_fpn(ParamStore<T>& store, const FpnConfig& cfg,
                      const std::array<int, 4>& in_widths, Rng& rng) {
    FpnParams<T> p;
    for (int k = 0; k < 4; ++k) {
        p.lateral[static_cast<size_t>(k)] =
            make_conv(store, "fpn.lateral" + std::to_string(k + 1), cfg.width,
                      in_widths[static_cast<size_t>(k)], 1, rng);
    }
    return p;
}

template <typename T>
PyramidPair<T> fpn_exchange(const PyramidPair<T>& pyr, const FpnConfig& cfg,
                            const FpnParams<T>& params);

// Same pathway on a single pyramid (no branch to exchange with); the
// exchange-disabled bi-temporal pass must match this per branch.
template <typename T>
std::array<Tensor<T>, 4> fpn_single(const std::array<Tensor<T>, 4>& levels,
                                    const FpnConfig& cfg, const FpnParams<T>& params);

}  // namespace lexcd
