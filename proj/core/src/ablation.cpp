#include "lexcd/ablation.hpp"

#include <cstdio>
#include <fstream>

#include "lexcd/infer.hpp"
#include "lexcd/metrics.hpp"

namespace lexcd {

namespace {

uint64_t stream_digest(const RunConfig& cfg, size_t train_count) {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        for (size_t i : epoch_order(cfg.seed, epoch, train_count)) mix(i);
        mix(epoch_aug_seed(cfg.seed, epoch));
    }
    return h;
}

double test_iou(const ChangeModel<float>& model, const std::vector<SamplePair>& test_set,
                int batch_size) {
    return evaluate_iou(model, test_set, batch_size);
}

}  // namespace

AblationReport run_ablation(const RunConfig& base, const std::vector<SamplePair>& train_set,
                            const std::vector<SamplePair>& val_set,
                            const std::vector<SamplePair>& test_set) {
    AblationReport report;
    const bool flags[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
    for (const auto& f : flags) {
        RunConfig cfg = base;
        cfg.encoder.csdw_per_level = f[0];
        cfg.decoder.led = f[1];

        ChangeModel<float> model(cfg);
        TrainResult result = train_model(model, train_set, val_set);

        AblationRow row;
        row.encoder_csdw = f[0];
        row.decoder_led = f[1];
        row.best_val_iou = result.best_val_iou;
        row.iou = test_iou(model, test_set, cfg.train.batch_size);
        row.data_stream_digest = stream_digest(cfg, train_set.size());
        report.rows.push_back(row);
    }
    return report;
}

void write_ablation_csv(const std::string& path, const AblationReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "encoder_csdw,decoder_led,IoU\n";
    char buf[64];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.2f\n", row.encoder_csdw ? "yes" : "no",
                      row.decoder_led ? "yes" : "no", row.iou * 100.0);
        out << buf;
    }
}

}  // namespace lexcd
