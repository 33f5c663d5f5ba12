#include "lexcd/fpn.hpp"

namespace lexcd {

template <typename T>
PyramidPair<T> fpn_exchange(const PyramidPair<T>& pyr, const FpnConfig& cfg,
                            const FpnParams<T>& params) {
    PyramidPair<T> out;
    std::array<Tensor<T>, 4> lat_a, lat_b;
    for (int k = 0; k < 4; ++k) {
        lat_a[static_cast<size_t>(k)] = apply_conv(pyr.a[static_cast<size_t>(k)],
                                                   params.lateral[static_cast<size_t>(k)]);
        lat_b[static_cast<size_t>(k)] = apply_conv(pyr.b[static_cast<size_t>(k)],
                                                   params.lateral[static_cast<size_t>(k)]);
    }
    out.a[3] = lat_a[3];
    out.b[3] = lat_b[3];
    for (int k = 2; k >= 0; --k) {
        // edge index 0 is the coarsest top-down edge (level 4 -> 3)
        const bool swap = cfg.exchange && cfg.exchange_edges[static_cast<size_t>(2 - k)];
        Tensor<T> td_a = bilinear_upsample(swap ? out.b[static_cast<size_t>(k + 1)]
                                                : out.a[static_cast<size_t>(k + 1)],
                                           2);
        Tensor<T> td_b = bilinear_upsample(swap ? out.a[static_cast<size_t>(k + 1)]
                                                : out.b[static_cast<size_t>(k + 1)],
                                           2);
        out.a[static_cast<size_t>(k)] = add(lat_a[static_cast<size_t>(k)], td_a);
        out.b[static_cast<size_t>(k)] = add(lat_b[static_cast<size_t>(k)], td_b);
    }
    return out;
}

template <typename T>
std::array<Tensor<T>, 4> fpn_single(const std::array<Tensor<T>, 4>& levels,
                                    const FpnConfig& cfg, const FpnParams<T>& params) {
    (void)cfg;
    std::array<Tensor<T>, 4> out;
    std::array<Tensor<T>, 4> lat;
    for (int k = 0; k < 4; ++k) {
        lat[static_cast<size_t>(k)] =
            apply_conv(levels[static_cast<size_t>(k)], params.lateral[static_cast<size_t>(k)]);
    }
    out[3] = lat[3];
    for (int k = 2; k >= 0; --k) {
        out[static_cast<size_t>(k)] = add(
            lat[static_cast<size_t>(k)], bilinear_upsample(out[static_cast<size_t>(k + 1)], 2));
    }
    return out;
}

#define LEXCD_INSTANTIATE_FPN(T)                                                      \
    template PyramidPair<T> fpn_exchange<T>(const PyramidPair<T>&, const FpnConfig&,  \
                                            const FpnParams<T>&);                     \
    template std::array<Tensor<T>, 4> fpn_single<T>(const std::array<Tensor<T>, 4>&,  \
                                                    const FpnConfig&, const FpnParams<T>&);

LEXCD_INSTANTIATE_FPN(float)
LEXCD_INSTANTIATE_FPN(double)
#undef LEXCD_INSTANTIATE_FPN

}  // namespace lexcd
