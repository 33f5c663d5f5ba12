#pragma once

#include <array>
#include <string>
#include <vector>

#include "lexcd/dataset.hpp"
#include "lexcd/model.hpp"

namespace lexcd {

// Per-level cosine analysis of an image pair under the model's encoder, plus
// the whole-image cosine of the raw RGB planes.
struct SimilarityReport {
    double rgb_cosine = 0.0;
    std::array<ImageU8, 4> channel_cos_maps;          // [-1,1] -> [0,255] grayscale
    std::array<std::vector<float>, 4> spatial_cos;    // per-channel vectors
};

SimilarityReport analyze_similarity(const ChangeModel<float>& model, const SamplePair& pair);

// Writes level{1..4}_phic.png, level{1..4}_phis.csv and rgb_cosine.csv.
void write_similarity(const std::string& dir, const SimilarityReport& report);

// Grayscale byte for a cosine in [-1,1]; inverse decodes within 1/255.
uint8_t encode_cosine(double v);
double decode_cosine(uint8_t g);

}  // namespace lexcd
