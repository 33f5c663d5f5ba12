#include "lexcd/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lexcd {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open PNG: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_bytep> rows;
    ImageU8 img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize every input to 8-bit gray or RGB
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
        png_set_interlace_handling(png);
    }
    png_read_update_info(png, info);

    img.w = static_cast<int>(png_get_image_width(png, info));
    img.h = static_cast<int>(png_get_image_height(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG channel count in " + path);
    }
    img.data.resize(static_cast<size_t>(img.w) * img.h * img.channels);
    rows.resize(static_cast<size_t>(img.h));
    for (int y = 0; y < img.h; ++y) {
        rows[static_cast<size_t>(y)] =
            img.data.data() + static_cast<size_t>(y) * img.w * img.channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw std::invalid_argument("write_png: channels must be 1 or 3");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write PNG: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_const_bytep> rows(static_cast<size_t>(img.h));
    for (int y = 0; y < img.h; ++y) {
        rows[static_cast<size_t>(y)] =
            img.data.data() + static_cast<size_t>(y) * img.w * img.channels;
    }
    png_write_rows(png, const_cast<png_bytepp>(rows.data()),
                   static_cast<png_uint_32>(img.h));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageF to_imagef(const ImageU8& img) {
    ImageF out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const uint8_t v = img.at(y, x, img.channels == 1 ? 0 : ch);
                out.at(ch, y, x) = static_cast<float>(v) / 255.f;
            }
    return out;
}

ImageU8 to_u8(const ImageF& img) {
    ImageU8 out(img.w, img.h, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = img.at(ch, y, x);
                v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                out.at(y, x, ch) = static_cast<uint8_t>(std::lround(v * 255.f));
            }
    return out;
}

Mask mask_from_png(const std::string& path) {
    const ImageU8 img = read_png(path);
    Mask m(1, img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) m.at(0, y, x) = img.at(y, x, 0) != 0 ? 1 : 0;
    return m;
}

void mask_to_png(const std::string& path, const Mask& mask, int index) {
    if (index < 0 || index >= mask.n) {
        throw std::invalid_argument("mask_to_png: index out of range");
    }
    ImageU8 img(mask.w, mask.h, 1);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) img.at(y, x, 0) = mask.at(index, y, x) ? 255 : 0;
    write_png(path, img);
}

}  // namespace lexcd
