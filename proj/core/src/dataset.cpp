#include "lexcd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace lexcd {

namespace fs = std::filesystem;

namespace {

float clamp01(float v) { return v < 0.f ? 0.f : (v > 1.f ? 1.f : v); }

// Value-noise background: two octaves of bilinearly interpolated random
// grids, with a mild per-channel tint.
ImageF make_background(int size, Rng& rng) {
    ImageF img(size, size);
    const int coarse = std::max(2, size / 16);
    const int fine = std::max(2, size / 4);
    std::vector<float> g0(static_cast<size_t>(coarse + 1) * (coarse + 1));
    std::vector<float> g1(static_cast<size_t>(fine + 1) * (fine + 1));
    for (auto& v : g0) v = static_cast<float>(rng.uniform());
    for (auto& v : g1) v = static_cast<float>(rng.uniform());
    float tint[3];
    for (auto& t : tint) t = static_cast<float>(rng.uniform(-0.12, 0.12));

    auto sample_grid = [](const std::vector<float>& grid, int cells, double u, double v) {
        const double x = u * cells;
        const double y = v * cells;
        const int x0 = std::min(static_cast<int>(x), cells - 1);
        const int y0 = std::min(static_cast<int>(y), cells - 1);
        const double tx = x - x0;
        const double ty = y - y0;
        const int stride = cells + 1;
        const double v00 = grid[static_cast<size_t>(y0 * stride + x0)];
        const double v01 = grid[static_cast<size_t>(y0 * stride + x0 + 1)];
        const double v10 = grid[static_cast<size_t>((y0 + 1) * stride + x0)];
        const double v11 = grid[static_cast<size_t>((y0 + 1) * stride + x0 + 1)];
        return (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
    };

    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5) / size;
            const double v = (y + 0.5) / size;
            const double base =
                0.35 + 0.35 * sample_grid(g0, coarse, u, v) + 0.18 * sample_grid(g1, fine, u, v);
            for (int ch = 0; ch < 3; ++ch) {
                img.at(ch, y, x) = clamp01(static_cast<float>(base) + tint[ch]);
            }
        }
    return img;
}

struct Shape {
    bool ellipse = false;
    int cx = 0, cy = 0, rx = 1, ry = 1;
    float color[3] = {0, 0, 0};

    bool contains(int x, int y) const {
        if (ellipse) {
            const double dx = (x - cx) / static_cast<double>(rx);
            const double dy = (y - cy) / static_cast<double>(ry);
            return dx * dx + dy * dy <= 1.0;
        }
        return std::abs(x - cx) <= rx && std::abs(y - cy) <= ry;
    }
};

Shape random_shape(int size, Rng& rng) {
    Shape s;
    s.ellipse = rng.coin();
    s.cx = rng.uniform_int(size / 8, size - size / 8 - 1);
    s.cy = rng.uniform_int(size / 8, size - size / 8 - 1);
    s.rx = rng.uniform_int(std::max(2, size / 16), std::max(3, size / 6));
    s.ry = rng.uniform_int(std::max(2, size / 16), std::max(3, size / 6));
    for (auto& c : s.color) c = static_cast<float>(rng.uniform(0.05, 0.95));
    return s;
}

void paint(ImageF& img, const Shape& s) {
    const int x0 = std::max(0, s.cx - s.rx);
    const int x1 = std::min(img.w - 1, s.cx + s.rx);
    const int y0 = std::max(0, s.cy - s.ry);
    const int y1 = std::min(img.h - 1, s.cy + s.ry);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!s.contains(x, y)) continue;
            for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = s.color[ch];
        }
}

void mark(Mask& mask, const Shape& s) {
    const int x0 = std::max(0, s.cx - s.rx);
    const int x1 = std::min(mask.w - 1, s.cx + s.rx);
    const int y0 = std::max(0, s.cy - s.ry);
    const int y1 = std::min(mask.h - 1, s.cy + s.ry);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (s.contains(x, y)) mask.at(0, y, x) = 1;
        }
}

void brightness(ImageF& img, float delta) {
    for (auto& v : img.rgb) v = clamp01(v + delta);
}

void contrast(ImageF& img, float factor) {
    for (auto& v : img.rgb) v = clamp01(v * factor);
}

void saturation(ImageF& img, float factor) {
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const float gray = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) +
                               0.114f * img.at(2, y, x);
            for (int ch = 0; ch < 3; ++ch) {
                img.at(ch, y, x) = clamp01(gray + (img.at(ch, y, x) - gray) * factor);
            }
        }
}

// brightness/contrast/saturation with given magnitudes, in a random order
void photometric(ImageF& img, Rng& rng, double b_mag, double c_lo, double c_hi) {
    const float b = static_cast<float>(rng.uniform(-b_mag, b_mag));
    const float c = static_cast<float>(rng.uniform(c_lo, c_hi));
    const float s = static_cast<float>(rng.uniform(c_lo, c_hi));
    int order[3] = {0, 1, 2};
    for (int i = 2; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    for (int op : order) {
        if (op == 0) brightness(img, b);
        if (op == 1) contrast(img, c);
        if (op == 2) saturation(img, s);
    }
}

ImageF rotate90(const ImageF& img, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return img;
    const int oh = (k % 2 == 0) ? img.h : img.w;
    const int ow = (k % 2 == 0) ? img.w : img.h;
    ImageF out(oh, ow);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                int ny = 0, nx = 0;
                if (k == 1) {  // 90 degrees counter-clockwise
                    ny = img.w - 1 - x;
                    nx = y;
                } else if (k == 2) {
                    ny = img.h - 1 - y;
                    nx = img.w - 1 - x;
                } else {
                    ny = x;
                    nx = img.h - 1 - y;
                }
                out.at(ch, ny, nx) = img.at(ch, y, x);
            }
    return out;
}

Mask rotate90(const Mask& m, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return m;
    const int oh = (k % 2 == 0) ? m.h : m.w;
    const int ow = (k % 2 == 0) ? m.w : m.h;
    Mask out(1, oh, ow);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            int ny = 0, nx = 0;
            if (k == 1) {
                ny = m.w - 1 - x;
                nx = y;
            } else if (k == 2) {
                ny = m.h - 1 - y;
                nx = m.w - 1 - x;
            } else {
                ny = x;
                nx = m.h - 1 - y;
            }
            out.at(0, ny, nx) = m.at(0, y, x);
        }
    return out;
}

void flip_h(ImageF& img) {
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w / 2; ++x) {
                std::swap(img.at(ch, y, x), img.at(ch, y, img.w - 1 - x));
            }
}
void flip_h(Mask& m) {
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w / 2; ++x) std::swap(m.at(0, y, x), m.at(0, y, m.w - 1 - x));
}
void flip_v(ImageF& img) {
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h / 2; ++y)
            for (int x = 0; x < img.w; ++x) {
                std::swap(img.at(ch, y, x), img.at(ch, img.h - 1 - y, x));
            }
}
void flip_v(Mask& m) {
    for (int y = 0; y < m.h / 2; ++y)
        for (int x = 0; x < m.w; ++x) std::swap(m.at(0, y, x), m.at(0, m.h - 1 - y, x));
}

}  // namespace

std::vector<SamplePair> gen_synthetic(const GenConfig& cfg, uint64_t seed) {
    if (cfg.size < 32 || cfg.size % 32 != 0) {
        throw std::invalid_argument("gen_synthetic: size must be a positive multiple of 32");
    }
    if (cfg.count < 1) throw std::invalid_argument("gen_synthetic: count must be >= 1");

    std::vector<SamplePair> out;
    out.reserve(static_cast<size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        Rng rng(Rng::mix(seed, static_cast<uint64_t>(i)));
        SamplePair s;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%05d", i);
        s.id = buf;

        ImageF base = make_background(cfg.size, rng);
        for (int k = 0; k < cfg.static_shapes; ++k) paint(base, random_shape(cfg.size, rng));

        const bool want_changes = cfg.max_added + cfg.max_removed > 0;
        const long long total_px = static_cast<long long>(cfg.size) * cfg.size;
        // redraw the change set until the mask fraction lands in the band
        for (int attempt = 0; attempt < 200; ++attempt) {
            s.img_a = base;
            s.img_b = base;
            s.mask = Mask(1, cfg.size, cfg.size);
            if (want_changes) {
                const int n_add = rng.uniform_int(cfg.max_added > 0 ? 1 : 0, cfg.max_added);
                const int n_rem = rng.uniform_int(cfg.max_removed > 0 ? 1 : 0, cfg.max_removed);
                for (int k = 0; k < n_add; ++k) {
                    const Shape sh = random_shape(cfg.size, rng);
                    paint(s.img_b, sh);
                    mark(s.mask, sh);
                }
                for (int k = 0; k < n_rem; ++k) {
                    const Shape sh = random_shape(cfg.size, rng);
                    paint(s.img_a, sh);
                    mark(s.mask, sh);
                }
            }
            if (!want_changes) break;
            long long on = 0;
            for (uint8_t v : s.mask.v) on += v;
            const double frac = static_cast<double>(on) / static_cast<double>(total_px);
            if (frac >= cfg.min_fill && frac <= cfg.max_fill) break;
        }
        if (cfg.photometric_jitter > 0) {
            photometric(s.img_a, rng, cfg.photometric_jitter, 1.0 - cfg.photometric_jitter,
                        1.0 + cfg.photometric_jitter);
            photometric(s.img_b, rng, cfg.photometric_jitter, 1.0 - cfg.photometric_jitter,
                        1.0 + cfg.photometric_jitter);
        }
        out.push_back(std::move(s));
    }
    return out;
}

SamplePair rotate_sample(const SamplePair& s, int quarter_turns) {
    SamplePair out;
    out.id = s.id;
    out.img_a = rotate90(s.img_a, quarter_turns);
    out.img_b = rotate90(s.img_b, quarter_turns);
    out.mask = rotate90(s.mask, quarter_turns);
    return out;
}

SamplePair augment(const SamplePair& s, uint64_t seed) {
    Rng rng(seed);
    const int quarter_turns = rng.uniform_int(0, 3);
    const bool hflip = rng.coin();
    const bool vflip = rng.coin();

    SamplePair out = rotate_sample(s, quarter_turns);
    if (hflip) {
        flip_h(out.img_a);
        flip_h(out.img_b);
        flip_h(out.mask);
    }
    if (vflip) {
        flip_v(out.img_a);
        flip_v(out.img_b);
        flip_v(out.mask);
    }
    photometric(out.img_a, rng, 0.2, 0.8, 1.25);
    photometric(out.img_b, rng, 0.2, 0.8, 1.25);
    return out;
}

void save_dataset(const std::string& dir, const std::vector<SamplePair>& samples) {
    fs::create_directories(fs::path(dir) / "A");
    fs::create_directories(fs::path(dir) / "B");
    fs::create_directories(fs::path(dir) / "label");
    for (const auto& s : samples) {
        write_png((fs::path(dir) / "A" / (s.id + ".png")).string(), to_u8(s.img_a));
        write_png((fs::path(dir) / "B" / (s.id + ".png")).string(), to_u8(s.img_b));
        mask_to_png((fs::path(dir) / "label" / (s.id + ".png")).string(), s.mask);
    }
}

std::vector<SamplePair> load_dataset(const std::string& dir) {
    const fs::path a_dir = fs::path(dir) / "A";
    const fs::path b_dir = fs::path(dir) / "B";
    const fs::path label_dir = fs::path(dir) / "label";
    if (!fs::is_directory(a_dir) || !fs::is_directory(b_dir) || !fs::is_directory(label_dir)) {
        throw std::runtime_error("dataset directory must contain A/, B/ and label/: " + dir);
    }
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(a_dir)) {
        if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw std::runtime_error("no PNG pairs found under " + dir);

    std::vector<SamplePair> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        SamplePair s;
        s.id = id;
        s.img_a = to_imagef(read_png((a_dir / (id + ".png")).string()));
        s.img_b = to_imagef(read_png((b_dir / (id + ".png")).string()));
        s.mask = mask_from_png((label_dir / (id + ".png")).string());
        if (s.img_a.h != s.img_b.h || s.img_a.w != s.img_b.w || s.mask.h != s.img_a.h ||
            s.mask.w != s.img_a.w) {
            throw std::runtime_error("misaligned sample " + id + " in " + dir);
        }
        out.push_back(std::move(s));
    }
    return out;
}

Tensor<float> images_to_tensor(const std::vector<const ImageF*>& images) {
    if (images.empty()) throw std::invalid_argument("images_to_tensor: empty batch");
    const int h = images[0]->h;
    const int w = images[0]->w;
    std::vector<float> data;
    data.reserve(images.size() * 3 * static_cast<size_t>(h) * w);
    for (const ImageF* img : images) {
        if (img->h != h || img->w != w) {
            throw std::invalid_argument("images_to_tensor: mixed sizes in batch");
        }
        data.insert(data.end(), img->rgb.begin(), img->rgb.end());
    }
    return Tensor<float>::from_vector(Shape4{static_cast<int>(images.size()), 3, h, w},
                                      std::move(data));
}

Mask masks_to_batch(const std::vector<const Mask*>& masks) {
    if (masks.empty()) throw std::invalid_argument("masks_to_batch: empty batch");
    const int h = masks[0]->h;
    const int w = masks[0]->w;
    Mask out(static_cast<int>(masks.size()), h, w);
    size_t offset = 0;
    for (const Mask* m : masks) {
        if (m->n != 1 || m->h != h || m->w != w) {
            throw std::invalid_argument("masks_to_batch: mixed shapes in batch");
        }
        std::copy(m->v.begin(), m->v.end(), out.v.begin() + static_cast<long long>(offset));
        offset += m->v.size();
    }
    return out;
}

}  // namespace lexcd
