#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lexcd {

struct EncoderConfig {
    std::array<int, 4> widths = {32, 64, 128, 256};  // strictly increasing
    int stem_width = 16;
    int blocks_per_stage = 2;
    std::string refine = "conv";  // conv | winattn
    int attn_window = 4;
    bool csdw_per_level = true;
    std::array<bool, 4> csdw_levels = {true, true, true, true};
    bool csdw_shared_conv = false;  // tie the two temporal conv blocks
    int csdw_kernel = 3;
};

struct FpnConfig {
    int width = 128;
    bool exchange = true;
    // one flag per top-down edge, coarsest edge first
    std::array<bool, 3> exchange_edges = {true, false, true};
};

struct DecoderConfig {
    bool led = true;  // false selects the plain layer-by-layer upsample decoder
    int squeeze_ratio = 4;
    bool tied_streams = false;
    std::string refine = "conv";  // conv | winattn
    int attn_window = 4;
    bool csdw_shared_conv = false;
    int csdw_kernel = 3;
    double aux_weight = 0.3;
};

struct TrainConfig {
    double lr = 1e-3;
    std::string lr_schedule = "cosine";  // cosine | constant
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 30;
    int batch_size = 8;
    int patch = 64;
    bool augment = true;
    // 0 disables; when both are > 0, training stops at the first epoch whose
    // train/val IoU reach the thresholds (best checkpoint still kept by val IoU)
    double early_stop_train_iou = 0.0;
    double early_stop_val_iou = 0.0;
};

struct GenConfig {
    int size = 64;
    int count = 200;
    double min_fill = 0.05;
    double max_fill = 0.30;
    int max_added = 2;    // shapes present only in image B
    int max_removed = 2;  // shapes present only in image A
    int static_shapes = 2;
    double photometric_jitter = 0.05;
};

struct InferConfig {
    int patch = 64;
    int stride = 32;
};

struct RunConfig {
    uint64_t seed = 0;
    EncoderConfig encoder;
    FpnConfig fpn;
    DecoderConfig decoder;
    TrainConfig train;
    GenConfig data;
    InferConfig infer;

    void validate() const;
};

// JSON round trip. Unknown keys are rejected so config typos fail loudly.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

// dotted-path overrides, e.g. "train.lr=0.01" or "encoder.widths=[8,16,24,32]"
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

// FNV-1a over the canonical JSON dump; stored in checkpoints.
uint64_t config_digest(const RunConfig& cfg);

}  // namespace lexcd
