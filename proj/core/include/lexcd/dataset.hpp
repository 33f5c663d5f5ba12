#pragma once

#include <string>
#include <vector>

#include "lexcd/config.hpp"
#include "lexcd/image.hpp"
#include "lexcd/rng.hpp"
#include "lexcd/tensor.hpp"

namespace lexcd {

// Bi-temporal record: two aligned images plus the binary change mask.
struct SamplePair {
    ImageF img_a;
    ImageF img_b;
    Mask mask;  // n == 1
    std::string id;
};

// Deterministic synthetic pairs: a shared textured background; image B adds
// and image A keeps shapes that were removed; the mask is the union of all
// altered regions; each temporal image gets independent photometric jitter.
std::vector<SamplePair> gen_synthetic(const GenConfig& cfg, uint64_t seed);

// RandomRotate (90-degree multiples) and RandomFlip drawn once and applied to
// all three planes; photometric distortion drawn per temporal image
// (brightness +-0.2, contrast x[0.8,1.25], saturation x[0.8,1.25], applied in
// random order). The mask is never photometrically altered.
SamplePair augment(const SamplePair& s, uint64_t seed);

// Counter-clockwise quarter turns applied jointly to both images and the mask.
SamplePair rotate_sample(const SamplePair& s, int quarter_turns);

// Directory layout: A/<id>.png, B/<id>.png, label/<id>.png (label 0 / 255).
void save_dataset(const std::string& dir, const std::vector<SamplePair>& samples);
std::vector<SamplePair> load_dataset(const std::string& dir);

// Batch assembly into the model's (N,3,H,W) layout.
Tensor<float> images_to_tensor(const std::vector<const ImageF*>& images);
Mask masks_to_batch(const std::vector<const Mask*>& masks);

}  // namespace lexcd
