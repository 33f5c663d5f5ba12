#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lexcd {

// Batched binary label grid (N,H,W) with values in {0,1}.
struct Mask {
    int n = 0;
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int n_, int h_, int w_, uint8_t fill = 0)
        : n(n_), h(h_), w(w_), v(static_cast<size_t>(n_) * h_ * w_, fill) {}

    long long numel() const { return static_cast<long long>(n) * h * w; }

    uint8_t at(int ni, int y, int x) const {
        return v[(static_cast<size_t>(ni) * h + y) * w + x];
    }
    uint8_t& at(int ni, int y, int x) {
        return v[(static_cast<size_t>(ni) * h + y) * w + x];
    }

    bool is_binary() const {
        for (uint8_t b : v) {
            if (b > 1) return false;
        }
        return true;
    }

    bool same_shape(const Mask& o) const { return n == o.n && h == o.h && w == o.w; }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }
};

// Nearest-neighbour downsample by an integer factor; preserves binary values.
// Sample point is the top-left pixel of each factor x factor cell.
inline Mask downsample_mask(const Mask& m, int factor) {
    if (factor <= 0 || m.h % factor != 0 || m.w % factor != 0) {
        throw std::invalid_argument("mask dims " + m.shape_str() +
                                    " not divisible by factor " + std::to_string(factor));
    }
    Mask out(m.n, m.h / factor, m.w / factor);
    for (int ni = 0; ni < m.n; ++ni)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(ni, y, x) = m.at(ni, y * factor, x * factor);
    return out;
}

}  // namespace lexcd
