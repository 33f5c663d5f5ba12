#include "lexcd/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lexcd {

ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("confusion: mask shapes " + pred.shape_str() + " and " +
                                    gt.shape_str() + " differ");
    }
    if (!pred.is_binary() || !gt.is_binary()) {
        throw std::invalid_argument("confusion: masks must be binary");
    }
    ConfusionCounts c;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const bool p = pred.v[i] != 0;
        const bool g = gt.v[i] != 0;
        if (p && g) {
            ++c.tp;
        } else if (!p && !g) {
            ++c.tn;
        } else if (p) {
            ++c.fp;
        } else {
            ++c.fn;
        }
    }
    return c;
}

MetricSet metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("metrics: zero pixel count");
    MetricSet m;
    const double tp = static_cast<double>(c.tp);
    const double tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);

    if (c.tp + c.fn + c.fp > 0) {
        m.iou = tp / (tp + fn + fp);
    } else {
        m.iou_defined = false;
    }
    if (c.tp + c.fp > 0) {
        m.prec = tp / (tp + fp);
    } else {
        m.prec_defined = false;
    }
    if (c.tp + c.fn > 0) {
        m.rec = tp / (tp + fn);
    } else {
        m.rec_defined = false;
    }
    if (m.prec_defined && m.rec_defined && m.prec + m.rec > 0) {
        m.f1 = 2.0 * m.prec * m.rec / (m.prec + m.rec);
    } else {
        m.f1_defined = false;
    }
    m.oa = (tp + tn) / (tp + tn + fn + fp);
    return m;
}

ImageU8 render_confusion(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) {
        throw std::invalid_argument("render_confusion: mask shapes " + pred.shape_str() +
                                    " and " + gt.shape_str() + " differ");
    }
    if (pred.n != 1) {
        throw std::invalid_argument("render_confusion: expects single-image masks");
    }
    if (!pred.is_binary() || !gt.is_binary()) {
        throw std::invalid_argument("render_confusion: masks must be binary");
    }
    ImageU8 img(pred.w, pred.h, 3);
    for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
            const bool p = pred.at(0, y, x) != 0;
            const bool g = gt.at(0, y, x) != 0;
            uint8_t r = 0, gr = 0, b = 0;
            if (p && g) {
                r = gr = b = 255;  // TP white
            } else if (p && !g) {
                gr = 255;  // FP green
            } else if (!p && g) {
                r = 255;  // FN red
            }
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = gr;
            img.at(y, x, 2) = b;
        }
    return img;
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "run,OA,IoU,F1,Rec,Prec\n";
    for (const auto& row : rows) {
        out << row.label << "," << pct(row.m.oa) << "," << pct(row.m.iou) << ","
            << pct(row.m.f1) << "," << pct(row.m.rec) << "," << pct(row.m.prec) << "\n";
    }
}

void write_radar_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric,model,value\n";
    for (const auto& row : rows) {
        out << "OA," << row.label << "," << pct(row.m.oa) << "\n";
        out << "IoU," << row.label << "," << pct(row.m.iou) << "\n";
        out << "F1," << row.label << "," << pct(row.m.f1) << "\n";
        out << "Rec," << row.label << "," << pct(row.m.rec) << "\n";
        out << "Prec," << row.label << "," << pct(row.m.prec) << "\n";
    }
}

}  // namespace lexcd
