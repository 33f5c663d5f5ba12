#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexcd/mask.hpp"

namespace lexcd {

// 8-bit interleaved image, channels 1 (gray) or 3 (RGB).
struct ImageU8 {
    int w = 0;
    int h = 0;
    int channels = 1;
    std::vector<uint8_t> data;

    ImageU8() = default;
    ImageU8(int w_, int h_, int channels_, uint8_t fill = 0)
        : w(w_), h(h_), channels(channels_),
          data(static_cast<size_t>(w_) * h_ * channels_, fill) {}

    uint8_t& at(int y, int x, int ch) {
        return data[(static_cast<size_t>(y) * w + x) * channels + ch];
    }
    uint8_t at(int y, int x, int ch) const {
        return data[(static_cast<size_t>(y) * w + x) * channels + ch];
    }
};

// Planar float RGB in [0,1], channel-major (3,H,W); the model's input layout.
struct ImageF {
    int h = 0;
    int w = 0;
    std::vector<float> rgb;

    ImageF() = default;
    ImageF(int h_, int w_, float fill = 0.f)
        : h(h_), w(w_), rgb(3 * static_cast<size_t>(h_) * w_, fill) {}

    float& at(int ch, int y, int x) {
        return rgb[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    float at(int ch, int y, int x) const {
        return rgb[(static_cast<size_t>(ch) * h + y) * w + x];
    }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

ImageF to_imagef(const ImageU8& img);       // gray is replicated to RGB
ImageU8 to_u8(const ImageF& img);           // clamp to [0,1], round to 8 bits

Mask mask_from_png(const std::string& path);   // 0 -> 0, anything else -> 1
void mask_to_png(const std::string& path, const Mask& mask, int index = 0);  // 0/255 gray

}  // namespace lexcd
