#include "lexcd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lexcd {

namespace {

constexpr char kMagic[8] = {'L', 'X', 'C', 'D', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

enum RecordKind : uint8_t { kValue = 0, kAdamM = 1, kAdamV = 2 };

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_record(std::ostream& out, const std::string& name, uint8_t kind, const Shape4& shape,
                  const std::vector<float>& payload) {
    write_pod<uint16_t>(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint8_t>(out, 0);  // dtype f32
    write_pod<uint8_t>(out, kind);
    for (int axis = 0; axis < 4; ++axis) write_pod<uint32_t>(out, static_cast<uint32_t>(shape[axis]));
    write_pod<uint64_t>(out, payload.size() * sizeof(float));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore<float>& store,
                     const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, kVersion);
    write_pod<uint64_t>(out, config_digest(meta.config));
    write_pod<int32_t>(out, meta.epoch);
    write_pod<double>(out, meta.best_val_iou);
    write_pod<uint64_t>(out, meta.adam_step);
    const std::string cfg_json = config_to_json(meta.config);
    write_pod<uint32_t>(out, static_cast<uint32_t>(cfg_json.size()));
    out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));

    uint32_t n_records = 0;
    for (const auto& e : store.entries()) {
        ++n_records;
        if (!e.adam_m.empty()) n_records += 2;
    }
    write_pod<uint32_t>(out, n_records);
    for (const auto& e : store.entries()) {
        write_record(out, e.name, kValue, e.tensor.shape(), e.tensor.value());
        if (!e.adam_m.empty()) {
            write_record(out, e.name, kAdamM, e.tensor.shape(), e.adam_m);
            write_record(out, e.name, kAdamV, e.tensor.shape(), e.adam_v);
        }
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

namespace {

CheckpointMeta read_header(std::istream& in, const std::string& path) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    const auto version = read_pod<uint32_t>(in);
    if (version != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " in " + path);
    }
    const auto digest = read_pod<uint64_t>(in);
    CheckpointMeta meta;
    meta.epoch = read_pod<int32_t>(in);
    meta.best_val_iou = read_pod<double>(in);
    meta.adam_step = read_pod<uint64_t>(in);
    const auto cfg_len = read_pod<uint32_t>(in);
    std::string cfg_json(cfg_len, '\0');
    in.read(cfg_json.data(), cfg_len);
    if (!in) throw std::runtime_error("checkpoint: truncated config in " + path);
    meta.config = config_from_json_text(cfg_json);
    if (config_digest(meta.config) != digest) {
        throw std::runtime_error("checkpoint config digest mismatch in " + path);
    }
    return meta;
}

}  // namespace

RunConfig peek_checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    return read_header(in, path).config;
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore<float>& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    CheckpointMeta meta = read_header(in, path);

    const auto n_records = read_pod<uint32_t>(in);
    for (uint32_t r = 0; r < n_records; ++r) {
        const auto name_len = read_pod<uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto dtype = read_pod<uint8_t>(in);
        const auto kind = read_pod<uint8_t>(in);
        Shape4 shape;
        for (int axis = 0; axis < 4; ++axis) {
            shape[axis] = static_cast<int>(read_pod<uint32_t>(in));
        }
        const auto byte_len = read_pod<uint64_t>(in);
        if (dtype != 0) throw std::runtime_error("checkpoint: unsupported dtype for " + name);
        if (byte_len != static_cast<uint64_t>(shape.numel()) * sizeof(float)) {
            throw std::runtime_error("checkpoint: payload size mismatch for " + name);
        }
        std::vector<float> payload(static_cast<size_t>(shape.numel()));
        in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(byte_len));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);

        if (!store.contains(name)) {
            throw std::runtime_error("checkpoint tensor " + name + " not present in model");
        }
        auto& tensor = store.get(name);
        if (!(tensor.shape() == shape)) {
            throw std::runtime_error("checkpoint shape mismatch for " + name + ": model " +
                                     tensor.shape().str() + " vs file " + shape.str());
        }
        for (auto& e : store.entries()) {
            if (e.name != name) continue;
            if (kind == kValue) {
                e.tensor.raw_value() = std::move(payload);
            } else if (kind == kAdamM) {
                e.adam_m = std::move(payload);
            } else if (kind == kAdamV) {
                e.adam_v = std::move(payload);
            } else {
                throw std::runtime_error("checkpoint: unknown record kind for " + name);
            }
            break;
        }
    }
    return meta;
}

}  // namespace lexcd
