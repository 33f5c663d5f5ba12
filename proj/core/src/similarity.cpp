#include "lexcd/similarity.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lexcd/csdw.hpp"

namespace lexcd {

uint8_t encode_cosine(double v) {
    if (v < -1.0) v = -1.0;
    if (v > 1.0) v = 1.0;
    return static_cast<uint8_t>(std::lround((v + 1.0) * 0.5 * 255.0));
}

double decode_cosine(uint8_t g) {
    return static_cast<double>(g) / 255.0 * 2.0 - 1.0;
}

SimilarityReport analyze_similarity(const ChangeModel<float>& model, const SamplePair& pair) {
    SimilarityReport report;

    // raw RGB flattening of the two images
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < pair.img_a.rgb.size(); ++i) {
        dot += static_cast<double>(pair.img_a.rgb[i]) * pair.img_b.rgb[i];
        na += static_cast<double>(pair.img_a.rgb[i]) * pair.img_a.rgb[i];
        nb += static_cast<double>(pair.img_b.rgb[i]) * pair.img_b.rgb[i];
    }
    report.rgb_cosine = dot / (std::max(std::sqrt(na), kCosineEps) *
                               std::max(std::sqrt(nb), kCosineEps));

    Tensor<float> ta = images_to_tensor({&pair.img_a});
    Tensor<float> tb = images_to_tensor({&pair.img_b});
    PyramidPair<float> pyr = model.encode(ta, tb);
    for (int k = 0; k < 4; ++k) {
        const Tensor<float> fa = pyr.a[static_cast<size_t>(k)];
        const Tensor<float> fb = pyr.b[static_cast<size_t>(k)];
        const Tensor<float> phic = channel_similarity_map(fa, fb);
        const Shape4 s = phic.shape();  // (1,1,h,w)
        ImageU8 img(s.w, s.h, 1);
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                img.at(y, x, 0) = encode_cosine(phic.at(0, 0, y, x));
            }
        report.channel_cos_maps[static_cast<size_t>(k)] = std::move(img);

        const Tensor<float> phis = spatial_similarity_vector(fa, fb);
        auto& vec = report.spatial_cos[static_cast<size_t>(k)];
        vec.assign(phis.value().begin(), phis.value().end());
    }
    return report;
}

void write_similarity(const std::string& dir, const SimilarityReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (int k = 0; k < 4; ++k) {
        const std::string base = (fs::path(dir) / ("level" + std::to_string(k + 1))).string();
        write_png(base + "_phic.png", report.channel_cos_maps[static_cast<size_t>(k)]);
        std::ofstream csv(base + "_phis.csv");
        if (!csv) throw std::runtime_error("cannot write " + base + "_phis.csv");
        csv << "channel,cosine\n";
        const auto& vec = report.spatial_cos[static_cast<size_t>(k)];
        for (size_t c = 0; c < vec.size(); ++c) {
            csv << c << "," << vec[c] << "\n";
        }
    }
    std::ofstream rgb((fs::path(dir) / "rgb_cosine.csv").string());
    if (!rgb) throw std::runtime_error("cannot write rgb_cosine.csv");
    rgb << "rgb_cosine\n" << report.rgb_cosine << "\n";
}

}  // namespace lexcd
