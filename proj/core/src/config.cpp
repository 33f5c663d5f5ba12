#include "lexcd/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lexcd {

using nlohmann::json;

namespace {

template <typename V>
void read_key(const json& j, const char* key, V& out) {
    if (j.contains(key)) out = j.at(key).get<V>();
}

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& section) {
    for (const auto& [key, unused] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw std::invalid_argument("config: unknown key '" + key + "' in " + section);
        }
    }
}

json encoder_to_json(const EncoderConfig& c) {
    return json{{"widths", c.widths},
                {"stem_width", c.stem_width},
                {"blocks_per_stage", c.blocks_per_stage},
                {"refine", c.refine},
                {"attn_window", c.attn_window},
                {"csdw_per_level", c.csdw_per_level},
                {"csdw_levels", c.csdw_levels},
                {"csdw_shared_conv", c.csdw_shared_conv},
                {"csdw_kernel", c.csdw_kernel}};
}

void encoder_from_json(const json& j, EncoderConfig& c) {
    check_known_keys(j,
                     {"widths", "stem_width", "blocks_per_stage", "refine", "attn_window",
                      "csdw_per_level", "csdw_levels", "csdw_shared_conv", "csdw_kernel"},
                     "encoder");
    read_key(j, "widths", c.widths);
    read_key(j, "stem_width", c.stem_width);
    read_key(j, "blocks_per_stage", c.blocks_per_stage);
    read_key(j, "refine", c.refine);
    read_key(j, "attn_window", c.attn_window);
    read_key(j, "csdw_per_level", c.csdw_per_level);
    read_key(j, "csdw_levels", c.csdw_levels);
    read_key(j, "csdw_shared_conv", c.csdw_shared_conv);
    read_key(j, "csdw_kernel", c.csdw_kernel);
}

json fpn_to_json(const FpnConfig& c) {
    return json{{"width", c.width},
                {"exchange", c.exchange},
                {"exchange_edges", c.exchange_edges}};
}

void fpn_from_json(const json& j, FpnConfig& c) {
    check_known_keys(j, {"width", "exchange", "exchange_edges"}, "fpn");
    read_key(j, "width", c.width);
    read_key(j, "exchange", c.exchange);
    read_key(j, "exchange_edges", c.exchange_edges);
}

json decoder_to_json(const DecoderConfig& c) {
    return json{{"led", c.led},
                {"squeeze_ratio", c.squeeze_ratio},
                {"tied_streams", c.tied_streams},
                {"refine", c.refine},
                {"attn_window", c.attn_window},
                {"csdw_shared_conv", c.csdw_shared_conv},
                {"csdw_kernel", c.csdw_kernel},
                {"aux_weight", c.aux_weight}};
}

void decoder_from_json(const json& j, DecoderConfig& c) {
    check_known_keys(j,
                     {"led", "squeeze_ratio", "tied_streams", "refine", "attn_window",
                      "csdw_shared_conv", "csdw_kernel", "aux_weight"},
                     "decoder");
    read_key(j, "led", c.led);
    read_key(j, "squeeze_ratio", c.squeeze_ratio);
    read_key(j, "tied_streams", c.tied_streams);
    read_key(j, "refine", c.refine);
    read_key(j, "attn_window", c.attn_window);
    read_key(j, "csdw_shared_conv", c.csdw_shared_conv);
    read_key(j, "csdw_kernel", c.csdw_kernel);
    read_key(j, "aux_weight", c.aux_weight);
}

json train_to_json(const TrainConfig& c) {
    return json{{"lr", c.lr},
                {"lr_schedule", c.lr_schedule},
                {"weight_decay", c.weight_decay},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"patch", c.patch},
                {"augment", c.augment},
                {"early_stop_train_iou", c.early_stop_train_iou},
                {"early_stop_val_iou", c.early_stop_val_iou}};
}

void train_from_json(const json& j, TrainConfig& c) {
    check_known_keys(j,
                     {"lr", "lr_schedule", "weight_decay", "beta1", "beta2", "adam_eps",
                      "epochs", "batch_size", "patch", "augment", "early_stop_train_iou",
                      "early_stop_val_iou"},
                     "train");
    read_key(j, "lr", c.lr);
    read_key(j, "lr_schedule", c.lr_schedule);
    read_key(j, "weight_decay", c.weight_decay);
    read_key(j, "beta1", c.beta1);
    read_key(j, "beta2", c.beta2);
    read_key(j, "adam_eps", c.adam_eps);
    read_key(j, "epochs", c.epochs);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "patch", c.patch);
    read_key(j, "augment", c.augment);
    read_key(j, "early_stop_train_iou", c.early_stop_train_iou);
    read_key(j, "early_stop_val_iou", c.early_stop_val_iou);
}

json data_to_json(const GenConfig& c) {
    return json{{"size", c.size},
                {"count", c.count},
                {"min_fill", c.min_fill},
                {"max_fill", c.max_fill},
                {"max_added", c.max_added},
                {"max_removed", c.max_removed},
                {"static_shapes", c.static_shapes},
                {"photometric_jitter", c.photometric_jitter}};
}

void data_from_json(const json& j, GenConfig& c) {
    check_known_keys(j,
                     {"size", "count", "min_fill", "max_fill", "max_added", "max_removed",
                      "static_shapes", "photometric_jitter"},
                     "data");
    read_key(j, "size", c.size);
    read_key(j, "count", c.count);
    read_key(j, "min_fill", c.min_fill);
    read_key(j, "max_fill", c.max_fill);
    read_key(j, "max_added", c.max_added);
    read_key(j, "max_removed", c.max_removed);
    read_key(j, "static_shapes", c.static_shapes);
    read_key(j, "photometric_jitter", c.photometric_jitter);
}

json infer_to_json(const InferConfig& c) {
    return json{{"patch", c.patch}, {"stride", c.stride}};
}

void infer_from_json(const json& j, InferConfig& c) {
    check_known_keys(j, {"patch", "stride"}, "infer");
    read_key(j, "patch", c.patch);
    read_key(j, "stride", c.stride);
}

json to_json(const RunConfig& cfg) {
    return json{{"seed", cfg.seed},          {"encoder", encoder_to_json(cfg.encoder)},
                {"fpn", fpn_to_json(cfg.fpn)}, {"decoder", decoder_to_json(cfg.decoder)},
                {"train", train_to_json(cfg.train)}, {"data", data_to_json(cfg.data)},
                {"infer", infer_to_json(cfg.infer)}};
}

}  // namespace

void RunConfig::validate() const {
    for (int i = 1; i < 4; ++i) {
        if (encoder.widths[static_cast<size_t>(i)] <= encoder.widths[static_cast<size_t>(i - 1)]) {
            throw std::invalid_argument("config: encoder widths must be strictly increasing");
        }
    }
    if (encoder.refine != "conv" && encoder.refine != "winattn") {
        throw std::invalid_argument("config: encoder.refine must be conv or winattn");
    }
    if (decoder.refine != "conv" && decoder.refine != "winattn") {
        throw std::invalid_argument("config: decoder.refine must be conv or winattn");
    }
    if (encoder.blocks_per_stage < 1) {
        throw std::invalid_argument("config: blocks_per_stage must be >= 1");
    }
    if (fpn.width < 1) throw std::invalid_argument("config: fpn.width must be >= 1");
    if (fpn.width % decoder.squeeze_ratio != 0) {
        throw std::invalid_argument("config: fpn.width must be divisible by decoder.squeeze_ratio");
    }
    if (train.batch_size < 1 || train.epochs < 0) {
        throw std::invalid_argument("config: bad train.batch_size/epochs");
    }
    if (train.lr_schedule != "cosine" && train.lr_schedule != "constant") {
        throw std::invalid_argument("config: train.lr_schedule must be cosine or constant");
    }
    if (data.size % 32 != 0 || data.size < 32) {
        throw std::invalid_argument("config: data.size must be a positive multiple of 32");
    }
    if (infer.patch % 32 != 0 || infer.stride < 1 || infer.stride > infer.patch) {
        throw std::invalid_argument("config: need infer.patch % 32 == 0 and 1 <= stride <= patch");
    }
    if (data.min_fill < 0 || data.max_fill > 1 || data.min_fill > data.max_fill) {
        throw std::invalid_argument("config: bad data fill band");
    }
}

RunConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    check_known_keys(j, {"seed", "encoder", "fpn", "decoder", "train", "data", "infer"},
                     "top level");
    RunConfig cfg;
    read_key(j, "seed", cfg.seed);
    if (j.contains("encoder")) encoder_from_json(j.at("encoder"), cfg.encoder);
    if (j.contains("fpn")) fpn_from_json(j.at("fpn"), cfg.fpn);
    if (j.contains("decoder")) decoder_from_json(j.at("decoder"), cfg.decoder);
    if (j.contains("train")) train_from_json(j.at("train"), cfg.train);
    if (j.contains("data")) data_from_json(j.at("data"), cfg.data);
    if (j.contains("infer")) infer_from_json(j.at("infer"), cfg.infer);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    return to_json(cfg).dump(2);
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << config_to_json(cfg) << "\n";
}

void apply_override(RunConfig& cfg, const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override must be key.path=value: " + key_equals_value);
    }
    std::string path = key_equals_value.substr(0, eq);
    const std::string value = key_equals_value.substr(eq + 1);

    json j = to_json(cfg);
    for (auto& ch : path) {
        if (ch == '.') ch = '/';
    }
    const json::json_pointer ptr("/" + path);
    if (!j.contains(ptr)) {
        throw std::invalid_argument("override: unknown config key '" +
                                    key_equals_value.substr(0, eq) + "'");
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings like refine=conv
    }
    j[ptr] = parsed;
    cfg = config_from_json_text(j.dump());
}

uint64_t config_digest(const RunConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace lexcd
