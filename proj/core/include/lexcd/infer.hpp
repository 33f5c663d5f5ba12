#pragma once

#include <functional>

#include "lexcd/dataset.hpp"
#include "lexcd/model.hpp"

namespace lexcd {

// (1,3,patch,patch) pair -> (1,2,patch,patch) logits.
using TileForward = std::function<Tensor<float>(const Tensor<float>&, const Tensor<float>&)>;

// Tiled sliding-window inference: tiles at the given stride (edge tiles
// aligned to the far border), per-pixel class probabilities averaged over
// overlaps, argmax thresholding (change requires strictly higher
// probability).
Mask slide_infer(const TileForward& forward, const ImageF& img_a, const ImageF& img_b,
                 int patch, int stride);

// Convenience wrapper around a trained model.
Mask slide_infer(const ChangeModel<float>& model, const ImageF& img_a, const ImageF& img_b,
                 int patch, int stride);

}  // namespace lexcd
