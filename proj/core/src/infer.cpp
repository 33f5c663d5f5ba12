#include "lexcd/infer.hpp"

#include <cmath>

#include "lexcd/ops.hpp"

namespace lexcd {

namespace {

std::vector<int> tile_origins(int image_extent, int patch, int stride) {
    std::vector<int> origins;
    for (int o = 0;; o += stride) {
        if (o + patch >= image_extent) {
            origins.push_back(image_extent - patch);
            break;
        }
        origins.push_back(o);
    }
    return origins;
}

Tensor<float> crop_to_tensor(const ImageF& img, int y0, int x0, int patch) {
    std::vector<float> data(3 * static_cast<size_t>(patch) * patch);
    size_t o = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x) data[o++] = img.at(ch, y0 + y, x0 + x);
    return Tensor<float>::from_vector(Shape4{1, 3, patch, patch}, std::move(data));
}

}  // namespace

Mask slide_infer(const TileForward& forward, const ImageF& img_a, const ImageF& img_b,
                 int patch, int stride) {
    if (img_a.h != img_b.h || img_a.w != img_b.w) {
        throw std::invalid_argument("slide_infer: temporal images differ in size");
    }
    if (patch % 32 != 0 || patch < 32) {
        throw std::invalid_argument("slide_infer: patch must be a positive multiple of 32");
    }
    if (stride < 1 || stride > patch) {
        throw std::invalid_argument("slide_infer: need 1 <= stride <= patch");
    }
    if (img_a.h < patch || img_a.w < patch) {
        throw std::invalid_argument("slide_infer: image " + std::to_string(img_a.w) + "x" +
                                    std::to_string(img_a.h) + " is smaller than the patch " +
                                    std::to_string(patch) + "; pad the input or use a smaller patch");
    }

    const int H = img_a.h;
    const int W = img_a.w;
    std::vector<double> prob0(static_cast<size_t>(H) * W, 0.0);
    std::vector<double> prob1(static_cast<size_t>(H) * W, 0.0);
    std::vector<uint32_t> hits(static_cast<size_t>(H) * W, 0);

    for (int y0 : tile_origins(H, patch, stride)) {
        for (int x0 : tile_origins(W, patch, stride)) {
            Tensor<float> ta = crop_to_tensor(img_a, y0, x0, patch);
            Tensor<float> tb = crop_to_tensor(img_b, y0, x0, patch);
            Tensor<float> logits = forward(ta, tb);
            if (logits.shape().c != 2 || logits.shape().h != patch ||
                logits.shape().w != patch || logits.shape().n != 1) {
                throw std::runtime_error("slide_infer: tile forward returned " +
                                         logits.shape().str());
            }
            Tensor<float> probs = softmax_channels(logits);
            const auto& pv = probs.value();
            const long long plane = static_cast<long long>(patch) * patch;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) {
                    const size_t dst = static_cast<size_t>(y0 + y) * W + (x0 + x);
                    const size_t src = static_cast<size_t>(y) * patch + x;
                    prob0[dst] += pv[src];
                    prob1[dst] += pv[src + static_cast<size_t>(plane)];
                    ++hits[dst];
                }
        }
    }

    Mask out(1, H, W);
    for (size_t i = 0; i < out.v.size(); ++i) {
        const double c = static_cast<double>(hits[i]);
        out.v[i] = (prob1[i] / c) > (prob0[i] / c) ? 1 : 0;
    }
    return out;
}

Mask slide_infer(const ChangeModel<float>& model, const ImageF& img_a, const ImageF& img_b,
                 int patch, int stride) {
    return slide_infer(
        [&model](const Tensor<float>& a, const Tensor<float>& b) {
            return model.forward(a, b).main_logits;
        },
        img_a, img_b, patch, stride);
}

}  // namespace lexcd
