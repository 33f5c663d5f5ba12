#pragma once

#include <cstdint>
#include <string>

#include "lexcd/config.hpp"
#include "lexcd/param_store.hpp"

namespace lexcd {

// Versioned binary container: header (magic, version, config digest,
// training progress, config JSON echo) followed by named tensor records
// (name, dtype, kind, dims, raw little-endian payload). Round trips are
// byte-exact.
struct CheckpointMeta {
    RunConfig config;
    int epoch = 0;
    double best_val_iou = 0.0;
    uint64_t adam_step = 0;
};

void save_checkpoint(const std::string& path, const ParamStore<float>& store,
                     const CheckpointMeta& meta);

// The stored config, for constructing the model before loading weights.
RunConfig peek_checkpoint_config(const std::string& path);

// Fills values and optimizer state into a store with matching names/shapes.
CheckpointMeta load_checkpoint(const std::string& path, ParamStore<float>& store);

}  // namespace lexcd
