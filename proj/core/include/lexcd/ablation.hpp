#pragma once

#include <string>
#include <vector>

#include "lexcd/dataset.hpp"
#include "lexcd/train.hpp"

namespace lexcd {

// One row of the 2x2 component study: encoder weighting on/off x
// layer-exchange decoder on/off.
struct AblationRow {
    bool encoder_csdw = false;
    bool decoder_led = false;
    double iou = 0.0;
    double best_val_iou = 0.0;
    uint64_t data_stream_digest = 0;  // digest of the sample order + aug seeds consumed
};

struct AblationReport {
    std::vector<AblationRow> rows;  // exactly 4, in (x,x),(v,x),(x,v),(v,v) order
};

// Trains the four configurations from the shared base config and seed and
// evaluates each on the test split. Every run consumes a bit-identical data
// stream; the digest in each row proves it.
AblationReport run_ablation(const RunConfig& base, const std::vector<SamplePair>& train_set,
                            const std::vector<SamplePair>& val_set,
                            const std::vector<SamplePair>& test_set);

// CSV shaped like the component-study table: one row per configuration with
// the IoU in percent.
void write_ablation_csv(const std::string& path, const AblationReport& report);

}  // namespace lexcd
