#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexcd/image.hpp"
#include "lexcd/mask.hpp"

namespace lexcd {

struct ConfusionCounts {
    uint64_t tp = 0;
    uint64_t tn = 0;
    uint64_t fp = 0;
    uint64_t fn = 0;

    uint64_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
};

// Positive class is change (1); counts tallied per pixel.
ConfusionCounts confusion(const Mask& pred, const Mask& gt);

// Fractions in [0,1]. A metric whose denominator is zero is reported as 0
// with its defined flag cleared.
struct MetricSet {
    double iou = 0, prec = 0, rec = 0, f1 = 0, oa = 0;
    bool iou_defined = true, prec_defined = true, rec_defined = true, f1_defined = true;
};

MetricSet metrics(const ConfusionCounts& c);

// TP white, TN black, FP green, FN red.
ImageU8 render_confusion(const Mask& pred, const Mask& gt);

// One row per run with columns in percent, two decimals.
struct MetricsRow {
    std::string label;
    MetricSet m;
};
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

// Long-format (metric, model, value) rows for external radar plotting.
void write_radar_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace lexcd
