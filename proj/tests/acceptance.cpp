// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lexcd/ablation.hpp"
#include "lexcd/checkpoint.hpp"
#include "lexcd/grad_check.hpp"
#include "lexcd/infer.hpp"
#include "lexcd/metrics.hpp"

using namespace lexcd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Failures {
    std::vector<std::string> items;
    void require(bool ok, const std::string& what) {
        if (!ok) items.push_back(what);
    }
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

Tensor<double> random_tensor64(const Shape4& shape, Rng& rng, double lo, double hi,
                               bool requires_grad = false) {
    std::vector<double> v(static_cast<size_t>(shape.numel()));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor<double>::from_vector(shape, std::move(v), requires_grad);
}

// ---- criterion 1: closed-form weighting cases ------------------------------

void criterion_closed_forms(Failures& f) {
    Rng rng(1);
    Tensor<double> base = random_tensor64(Shape4{1, 4, 5, 5}, rng, 0.1, 1.0);

    const double w_same = 0.0723294881285132;    // (1 - sigmoid(1))^2
    const double w_anti = 0.5344466424175079;    // (1 - sigmoid(-1))^2
    CsdwWeights<double> same = change_weight(base, base);
    for (double v : same.weight.value()) {
        f.require(std::abs(v - w_same) <= 1e-5,
                  fmt("identical inputs: weight %.8f vs %.8f", v, w_same));
    }
    CsdwWeights<double> anti = change_weight(base, affine(base, -1.0, 0.0));
    for (double v : anti.weight.value()) {
        f.require(std::abs(v - w_anti) <= 1e-5,
                  fmt("anti-parallel inputs: weight %.8f vs %.8f", v, w_anti));
    }
    Tensor<double> oa = Tensor<double>::from_vector(Shape4{1, 2, 1, 2}, {1, 0, 0, 1});
    Tensor<double> ob = Tensor<double>::from_vector(Shape4{1, 2, 1, 2}, {0, 1, 1, 0});
    CsdwWeights<double> orth = change_weight(oa, ob);
    for (double v : orth.weight.value()) {
        f.require(v == 0.25, fmt("orthogonal construction: weight %.17g != 0.25 exactly", v));
    }
}

// ---- criterion 2: weight range invariant -----------------------------------

void criterion_weight_ranges(Failures& f) {
    Rng rng(2);
    const double lo = 0.268941, hi = 0.731059, tol = 1e-5;
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor<float> a = Tensor<float>::from_vector(
            Shape4{1, 3, 5, 7},
            [&] {
                std::vector<float> v(105);
                for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
                return v;
            }());
        Tensor<float> b = Tensor<float>::from_vector(
            Shape4{1, 3, 5, 7},
            [&] {
                std::vector<float> v(105);
                for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
                return v;
            }());
        CsdwWeights<float> w = change_weight(a, b);
        for (float v : w.channel_weight.value()) {
            f.require(v >= lo - tol && v <= hi + tol, fmt("W_c element %.8f outside band", v));
        }
        for (float v : w.spatial_weight.value()) {
            f.require(v >= lo - tol && v <= hi + tol, fmt("W_s element %.8f outside band", v));
        }
        for (float v : w.weight.value()) {
            f.require(v >= lo * lo - 1e-4 && v <= hi * hi + 1e-4,
                      fmt("W element %.8f outside product band", v));
        }
        if (!f.items.empty()) return;
    }
}

// ---- criterion 3: symmetry and positive-scale invariance -------------------

void criterion_symmetry_scale(Failures& f) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor<double> a = random_tensor64(Shape4{1, 4, 6, 6}, rng, -1.5, 1.5);
        Tensor<double> b = random_tensor64(Shape4{1, 4, 6, 6}, rng, -1.5, 1.5);
        const auto wab = change_weight(a, b).weight;
        const auto wba = change_weight(b, a).weight;
        for (size_t i = 0; i < wab.value().size(); ++i) {
            const double d = std::abs(wab.value()[i] - wba.value()[i]);
            f.require(d <= 1e-6, fmt("symmetry violated by %.3e", d));
        }
        for (double alpha : {0.1, 3.0, 100.0}) {
            const auto ws = change_weight(affine(a, alpha, 0.0), b).weight;
            for (size_t i = 0; i < wab.value().size(); ++i) {
                const double d = std::abs(wab.value()[i] - ws.value()[i]);
                f.require(d <= 1e-5, fmt("scale invariance at alpha=%.1f off by %.3e", alpha, d));
            }
        }
        if (!f.items.empty()) return;
    }
}

// ---- criterion 4: end-to-end gradient oracle -------------------------------

void criterion_grad_oracle(Failures& f) {
    RunConfig rc;
    rc.seed = 4;
    rc.encoder.widths = {2, 3, 4, 5};
    rc.encoder.stem_width = 2;
    rc.encoder.blocks_per_stage = 1;
    rc.fpn.width = 4;
    rc.decoder.squeeze_ratio = 2;
    ChangeModel<double> model(rc);
    Rng rng(4);
    // generic parameter point: zero-init residual tails sit exactly on the
    // relu kink, where central differences are invalid
    for (auto& e : model.params().entries()) {
        for (auto& v : e.tensor.raw_value()) v = rng.uniform(-0.3, 0.3);
    }
    Tensor<double> a = random_tensor64(Shape4{1, 3, 32, 32}, rng, 0.0, 1.0);
    Tensor<double> b = random_tensor64(Shape4{1, 3, 32, 32}, rng, 0.0, 1.0);
    Mask target(1, 32, 32);
    for (auto& v : target.v) v = rng.coin() ? 1 : 0;

    std::vector<std::pair<std::string, Tensor<double>>> leaves;
    for (const auto& e : model.params().entries()) leaves.emplace_back(e.name, e.tensor);

    GradCheckReport rep = grad_check(
        [&] { return model.loss(model.forward(a, b), target); }, leaves, 1e-4);
    std::printf("        [grad oracle] %lld scalars checked, max rel err %.3e (%s)\n",
                rep.checked, rep.max_rel_err, rep.worst_param.c_str());
    f.require(rep.max_rel_err < 1e-4,
              fmt("max relative error %.3e >= 1e-4", rep.max_rel_err) + " at " + rep.worst_param);
}

// ---- criterion 5: loss wiring ----------------------------------------------

void criterion_loss_wiring(Failures& f) {
    Rng rng(5);
    Mask target(2, 16, 16);
    for (auto& v : target.v) v = rng.coin() ? 1 : 0;
    for (int trial = 0; trial < 100; ++trial) {
        DecodeOutput<double> out;
        out.main_logits = random_tensor64(Shape4{2, 2, 16, 16}, rng, -3.0, 3.0);
        out.aux_logits = {random_tensor64(Shape4{2, 2, 8, 8}, rng, -3.0, 3.0),
                          random_tensor64(Shape4{2, 2, 4, 4}, rng, -3.0, 3.0),
                          random_tensor64(Shape4{2, 2, 2, 2}, rng, -3.0, 3.0)};
        const double total = total_loss(out, target, 0.3).item();
        const double main_ce = cross_entropy(out.main_logits, target).item();
        double aux = 0;
        for (const auto& logits : out.aux_logits) {
            aux += cross_entropy(logits, downsample_mask(target, 16 / logits.shape().h)).item();
        }
        const double gap = std::abs((total - main_ce) - 0.3 * aux);
        f.require(gap <= 1e-6, fmt("aux identity off by %.3e", gap));
        if (!f.items.empty()) return;
    }

    DecodeOutput<double> uniform;
    uniform.main_logits = Tensor<double>::zeros(Shape4{1, 2, 16, 16});
    uniform.aux_logits = {Tensor<double>::zeros(Shape4{1, 2, 8, 8}),
                          Tensor<double>::zeros(Shape4{1, 2, 4, 4}),
                          Tensor<double>::zeros(Shape4{1, 2, 2, 2})};
    Mask t2(1, 16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) t2.at(0, y, x) = (x + y) % 2;
    const double loss = total_loss(uniform, t2, 0.3).item();
    const double expect = 1.9 * std::log(2.0);
    f.require(std::abs(loss - expect) <= 1e-4,
              fmt("uniform-logits loss %.8f vs 1.9*ln2 = %.8f", loss, expect));
}

// ---- criterion 6: metric identities ----------------------------------------

void criterion_metric_identities(Failures& f) {
    Rng rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionCounts c;
        c.tp = static_cast<uint64_t>(rng.uniform_int(1, 100000));
        c.fp = static_cast<uint64_t>(rng.uniform_int(0, 100000));
        c.fn = static_cast<uint64_t>(rng.uniform_int(0, 100000));
        c.tn = static_cast<uint64_t>(rng.uniform_int(0, 100000));
        MetricSet m = metrics(c);
        const double gap = std::abs(m.f1 - 2.0 * m.iou / (1.0 + m.iou));
        f.require(gap <= 1e-9, fmt("F1/IoU identity off by %.3e", gap));
        if (!f.items.empty()) return;
    }
    MetricSet m = metrics(ConfusionCounts{5, 90, 3, 2});
    f.require(std::abs(m.iou - 0.5) <= 1e-9, fmt("worked example IoU %.6f", m.iou));
    f.require(std::abs(m.prec - 0.625) <= 1e-9, fmt("worked example Prec %.6f", m.prec));
    f.require(std::abs(m.rec - 0.714286) <= 1e-6, fmt("worked example Rec %.6f", m.rec));
    f.require(std::abs(m.f1 - 0.666667) <= 1e-6, fmt("worked example F1 %.6f", m.f1));
    f.require(std::abs(m.oa - 0.95) <= 1e-9, fmt("worked example OA %.6f", m.oa));
}

// ---- criterion 7: toy training convergence ---------------------------------

void criterion_training(Failures& f) {
    RunConfig rc;  // full model at the default widths
    rc.seed = 0;
    rc.data.size = 64;
    rc.data.count = 240;
    rc.train.epochs = 30;
    rc.train.early_stop_train_iou = 0.90;
    rc.train.early_stop_val_iou = 0.80;

    auto all = gen_synthetic(rc.data, rc.seed);
    std::vector<SamplePair> train_set(all.begin(), all.begin() + 200);
    std::vector<SamplePair> val_set(all.begin() + 200, all.end());

    ChangeModel<float> model(rc);
    TrainResult result = train_model(model, train_set, val_set);
    const double train_iou = evaluate_iou(model, train_set, rc.train.batch_size);
    const double val_iou = evaluate_iou(model, val_set, rc.train.batch_size);
    std::printf("        [training] %zu epochs run, best val IoU %.4f (epoch %d); final train"
                " IoU %.4f, val IoU %.4f\n",
                result.log.size(), result.best_val_iou, result.best_epoch, train_iou, val_iou);
    f.require(train_iou >= 0.90, fmt("train IoU %.4f < 0.90", train_iou));
    f.require(val_iou >= 0.80, fmt("val IoU %.4f < 0.80", val_iou));
    f.require(result.log.size() <= 30, "ran more than 30 epochs");
}

// ---- criterion 8: ablation harness ------------------------------------------

void criterion_ablation(Failures& f) {
    RunConfig rc;
    rc.seed = 8;
    rc.encoder.widths = {8, 12, 16, 24};
    rc.encoder.stem_width = 4;
    rc.encoder.blocks_per_stage = 1;
    rc.fpn.width = 16;
    rc.data.size = 64;
    rc.data.count = 56;
    rc.train.epochs = 6;
    rc.train.lr = 2e-3;

    auto all = gen_synthetic(rc.data, rc.seed);
    std::vector<SamplePair> train_set(all.begin(), all.begin() + 40);
    std::vector<SamplePair> val_set(all.begin() + 40, all.end());

    AblationReport report = run_ablation(rc, train_set, val_set, val_set);
    f.require(report.rows.size() == 4, "report does not have exactly 4 rows");
    const bool expected[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
    for (size_t i = 0; i < report.rows.size(); ++i) {
        f.require(report.rows[i].encoder_csdw == expected[i][0] &&
                      report.rows[i].decoder_led == expected[i][1],
                  "row flag pattern does not match the 2x2 matrix");
        f.require(report.rows[i].data_stream_digest == report.rows[0].data_stream_digest,
                  "data streams differ between ablation runs");
    }
    const std::string csv_path = "acceptance_out/ablation.csv";
    fs::create_directories("acceptance_out");
    write_ablation_csv(csv_path, report);
    std::ifstream in(csv_path);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    f.require(rows == 4, fmt("ablation.csv has %d data rows", rows));
    std::printf("        [ablation] IoU: baseline %.4f, +csdw %.4f, +led %.4f, full %.4f"
                " (gap full-baseline %+.4f, informational)\n",
                report.rows[0].iou, report.rows[1].iou, report.rows[2].iou, report.rows[3].iou,
                report.rows[3].iou - report.rows[0].iou);
}

// ---- criterion 9: tiling equivalence ----------------------------------------

void criterion_tiling(Failures& f) {
    RunConfig rc;
    rc.seed = 9;
    rc.encoder.widths = {8, 12, 16, 24};
    rc.encoder.stem_width = 4;
    rc.encoder.blocks_per_stage = 1;
    rc.fpn.width = 16;
    ChangeModel<float> model(rc);

    GenConfig g;
    g.size = 64;
    g.count = 1;
    SamplePair s64 = gen_synthetic(g, 90)[0];
    Mask single = slide_infer(model, s64.img_a, s64.img_b, 64, 32);
    Mask direct = model.predict(images_to_tensor({&s64.img_a}), images_to_tensor({&s64.img_b}));
    f.require(single.v == direct.v, "image == patch does not match a single forward pass");

    g.size = 96;
    SamplePair s96 = gen_synthetic(g, 91)[0];
    Mask tiled = slide_infer(model, s96.img_a, s96.img_b, 32, 32);
    bool partition_ok = true;
    for (int ty = 0; ty < 3 && partition_ok; ++ty)
        for (int tx = 0; tx < 3 && partition_ok; ++tx) {
            ImageF ca(32, 32), cb(32, 32);
            for (int ch = 0; ch < 3; ++ch)
                for (int y = 0; y < 32; ++y)
                    for (int x = 0; x < 32; ++x) {
                        ca.at(ch, y, x) = s96.img_a.at(ch, ty * 32 + y, tx * 32 + x);
                        cb.at(ch, y, x) = s96.img_b.at(ch, ty * 32 + y, tx * 32 + x);
                    }
            Mask tile = model.predict(images_to_tensor({&ca}), images_to_tensor({&cb}));
            for (int y = 0; y < 32 && partition_ok; ++y)
                for (int x = 0; x < 32; ++x) {
                    if (tiled.at(0, ty * 32 + y, tx * 32 + x) != tile.at(0, y, x)) {
                        partition_ok = false;
                        break;
                    }
                }
        }
    f.require(partition_ok, "stride == patch does not equal independent tile concatenation");
}

// ---- criterion 10: determinism and persistence ------------------------------

void criterion_determinism(Failures& f) {
    auto run_pipeline = [](const std::string& dir) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        RunConfig rc;
        rc.seed = 10;
        rc.encoder.widths = {4, 6, 8, 12};
        rc.encoder.stem_width = 3;
        rc.encoder.blocks_per_stage = 1;
        rc.fpn.width = 8;
        rc.data.size = 32;
        rc.data.count = 16;
        rc.train.epochs = 2;
        rc.train.batch_size = 4;
        rc.infer.patch = 32;
        rc.infer.stride = 16;

        auto all = gen_synthetic(rc.data, rc.seed);
        std::vector<SamplePair> train_set(all.begin(), all.begin() + 12);
        std::vector<SamplePair> val_set(all.begin() + 12, all.end());
        ChangeModel<float> model(rc);
        train_model(model, train_set, val_set, dir + "/checkpoint.bin");

        ConfusionCounts total;
        for (const auto& s : val_set) {
            Mask pred = slide_infer(model, s.img_a, s.img_b, rc.infer.patch, rc.infer.stride);
            total += confusion(pred, s.mask);
        }
        write_metrics_csv(dir + "/metrics.csv", {{"e2e", metrics(total)}});
    };

    run_pipeline("acceptance_out/run_a");
    run_pipeline("acceptance_out/run_b");
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string ma = slurp("acceptance_out/run_a/metrics.csv");
    f.require(!ma.empty() && ma == slurp("acceptance_out/run_b/metrics.csv"),
              "metrics.csv differs between identical-seed runs");
    f.require(slurp("acceptance_out/run_a/checkpoint.bin") ==
                  slurp("acceptance_out/run_b/checkpoint.bin"),
              "checkpoints differ between identical-seed runs");

    // persistence: reload and compare probe logits bitwise
    RunConfig stored = peek_checkpoint_config("acceptance_out/run_a/checkpoint.bin");
    ChangeModel<float> restored(stored);
    load_checkpoint("acceptance_out/run_a/checkpoint.bin", restored.params());
    GenConfig g;
    g.size = 32;
    g.count = 1;
    SamplePair probe = gen_synthetic(g, 17)[0];
    Tensor<float> pa = images_to_tensor({&probe.img_a});
    Tensor<float> pb = images_to_tensor({&probe.img_b});
    Tensor<float> l1 = restored.forward(pa, pb).main_logits;

    ChangeModel<float> restored2(stored);
    load_checkpoint("acceptance_out/run_a/checkpoint.bin", restored2.params());
    Tensor<float> l2 = restored2.forward(pa, pb).main_logits;
    f.require(l1.value() == l2.value(), "probe logits differ after checkpoint reload");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Failures&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "closed-form weighting cases (identical / anti-parallel / orthogonal)",
         criterion_closed_forms},
        {2, "weight-range invariant on 1000 randomized pairs", criterion_weight_ranges},
        {3, "weight symmetry and positive-scale invariance", criterion_symmetry_scale},
        {4, "end-to-end finite-difference gradient oracle (64-bit, step 1e-4)",
         criterion_grad_oracle},
        {5, "loss wiring: 0.3 auxiliary weight identity and uniform-logits value",
         criterion_loss_wiring},
        {6, "metric identities and the worked confusion example", criterion_metric_identities},
        {7, "toy training convergence (seed 0, 200/40 pairs, 64x64, <= 30 epochs)",
         criterion_training},
        {8, "ablation harness: 4-row matrix with shared-seed data parity", criterion_ablation},
        {9, "tiling equivalence (single tile; disjoint partition)", criterion_tiling},
        {10, "determinism and persistence (bitwise reports and checkpoints)",
         criterion_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Failures f;
        const auto t0 = Clock::now();
        try {
            c.run(f);
        } catch (const std::exception& e) {
            f.items.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (f.items.empty()) {
            std::printf("[PASS] criterion %2d (%7.2fs): %s\n", c.id, secs, c.title);
        } else {
            ++failed;
            std::printf("[FAIL] criterion %2d (%7.2fs): %s\n", c.id, secs, c.title);
            for (const auto& item : f.items) {
                std::printf("        -> %s\n", item.c_str());
            }
        }
        std::fflush(stdout);
    }
    if (failed == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d acceptance criteria FAILED\n", failed);
    }
    return failed;
}
