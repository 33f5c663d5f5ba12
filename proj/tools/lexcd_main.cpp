// Command-line harness for the change-detection kit: synthetic data,
// training, tiled inference, evaluation, the component ablation matrix, and
// per-level similarity analysis.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "lexcd/ablation.hpp"
#include "lexcd/checkpoint.hpp"
#include "lexcd/infer.hpp"
#include "lexcd/metrics.hpp"
#include "lexcd/similarity.hpp"

namespace fs = std::filesystem;
using namespace lexcd;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    uint64_t seed = 0;
    bool seed_given = false;
};

RunConfig resolve_config(const GlobalOpts& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    for (const auto& kv : g.overrides) apply_override(cfg, kv);
    if (g.seed_given) cfg.seed = g.seed;
    cfg.validate();
    return cfg;
}

std::vector<SamplePair> load_split(const std::string& dir) {
    std::cout << "loading dataset " << dir << "\n";
    auto samples = load_dataset(dir);
    std::cout << "  " << samples.size() << " pairs, " << samples[0].img_a.w << "x"
              << samples[0].img_a.h << "\n";
    return samples;
}

int cmd_gen_data(const GlobalOpts& g) {
    RunConfig cfg = resolve_config(g);
    auto samples = gen_synthetic(cfg.data, cfg.seed);
    fs::create_directories(g.out_dir);
    save_dataset(g.out_dir, samples);
    save_config(cfg, (fs::path(g.out_dir) / "gen_config.json").string());
    std::cout << "wrote " << samples.size() << " pairs of size " << cfg.data.size << " to "
              << g.out_dir << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_dir, const std::string& val_dir,
              double val_frac) {
    RunConfig cfg = resolve_config(g);
    auto all = load_split(data_dir);
    std::vector<SamplePair> train_set, val_set;
    if (!val_dir.empty()) {
        train_set = std::move(all);
        val_set = load_split(val_dir);
    } else {
        const size_t val_count =
            std::max<size_t>(1, static_cast<size_t>(static_cast<double>(all.size()) * val_frac));
        if (val_count >= all.size()) {
            throw std::runtime_error("validation fraction leaves no training data");
        }
        val_set.assign(all.end() - static_cast<long long>(val_count), all.end());
        train_set.assign(all.begin(), all.end() - static_cast<long long>(val_count));
    }
    std::cout << "training on " << train_set.size() << " pairs, validating on "
              << val_set.size() << "\n";

    fs::create_directories(g.out_dir);
    const std::string ckpt = (fs::path(g.out_dir) / "checkpoint.bin").string();
    ChangeModel<float> model(cfg);
    std::cout << "model parameters: " << model.params().scalar_count() << "\n";
    TrainResult result = train_model(model, train_set, val_set, ckpt, [](const EpochLog& l) {
        std::printf("epoch %3d  loss %.4f  val IoU %.4f\n", l.epoch, l.mean_loss, l.val_iou);
        std::fflush(stdout);
    });
    write_train_log((fs::path(g.out_dir) / "train_log.csv").string(), result.log);
    save_config(cfg, (fs::path(g.out_dir) / "config.json").string());
    std::printf("best val IoU %.4f at epoch %d; checkpoint: %s\n", result.best_val_iou,
                result.best_epoch, ckpt.c_str());
    return 0;
}

int cmd_infer(const GlobalOpts& g, const std::string& ckpt_path, const std::string& data_dir,
              int patch, int stride) {
    RunConfig cfg = peek_checkpoint_config(ckpt_path);
    ChangeModel<float> model(cfg);
    load_checkpoint(ckpt_path, model.params());
    if (patch > 0) cfg.infer.patch = patch;
    if (stride > 0) cfg.infer.stride = stride;

    auto samples = load_split(data_dir);
    const std::string mask_dir = (fs::path(g.out_dir) / "masks").string();
    fs::create_directories(mask_dir);
    for (const auto& s : samples) {
        const int p = std::min({cfg.infer.patch, s.img_a.h, s.img_a.w});
        const int use_patch = (p / 32) * 32;
        Mask mask = slide_infer(model, s.img_a, s.img_b, use_patch,
                                std::min(cfg.infer.stride, use_patch));
        mask_to_png((fs::path(mask_dir) / (s.id + ".png")).string(), mask);
    }
    std::cout << "wrote " << samples.size() << " masks to " << mask_dir << "\n";
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& pred_dir, const std::string& data_dir,
             const std::string& label, bool confusion_pngs, bool per_image) {
    auto samples = load_split(data_dir);
    fs::create_directories(g.out_dir);
    const std::string confusion_dir = (fs::path(g.out_dir) / "confusion").string();
    if (confusion_pngs) fs::create_directories(confusion_dir);

    ConfusionCounts total;
    std::vector<MetricsRow> per_image_rows;
    for (const auto& s : samples) {
        const std::string pred_path = (fs::path(pred_dir) / (s.id + ".png")).string();
        Mask pred = mask_from_png(pred_path);
        ConfusionCounts c = confusion(pred, s.mask);
        total += c;
        if (per_image) per_image_rows.push_back({s.id, metrics(c)});
        if (confusion_pngs) {
            write_png((fs::path(confusion_dir) / (s.id + ".png")).string(),
                      render_confusion(pred, s.mask));
        }
    }
    MetricSet m = metrics(total);
    std::vector<MetricsRow> rows{{label, m}};
    write_metrics_csv((fs::path(g.out_dir) / "metrics.csv").string(), rows);
    write_radar_csv((fs::path(g.out_dir) / "radar.csv").string(), rows);
    if (per_image) {
        write_metrics_csv((fs::path(g.out_dir) / "metrics_per_image.csv").string(),
                          per_image_rows);
    }
    std::printf("%s: OA %.2f  IoU %.2f  F1 %.2f  Rec %.2f  Prec %.2f\n", label.c_str(),
                m.oa * 100, m.iou * 100, m.f1 * 100, m.rec * 100, m.prec * 100);
    return 0;
}

int cmd_ablate(const GlobalOpts& g, const std::string& data_dir, const std::string& val_dir,
               const std::string& test_dir) {
    RunConfig cfg = resolve_config(g);
    auto train_set = load_split(data_dir);
    auto val_set = load_split(val_dir);
    auto test_set = test_dir.empty() ? val_set : load_split(test_dir);

    AblationReport report = run_ablation(cfg, train_set, val_set, test_set);
    fs::create_directories(g.out_dir);
    write_ablation_csv((fs::path(g.out_dir) / "ablation.csv").string(), report);
    for (const auto& row : report.rows) {
        std::printf("csdw=%s led=%s  IoU %.2f\n", row.encoder_csdw ? "yes" : "no ",
                    row.decoder_led ? "yes" : "no ", row.iou * 100);
    }
    std::printf("full model vs baseline IoU gap: %+.2f\n",
                (report.rows[3].iou - report.rows[0].iou) * 100);
    return 0;
}

int cmd_analyze(const GlobalOpts& g, const std::string& ckpt_path, const std::string& data_dir,
                const std::string& id, const std::string& a_path, const std::string& b_path) {
    RunConfig cfg;
    std::unique_ptr<ChangeModel<float>> model;
    if (!ckpt_path.empty()) {
        cfg = peek_checkpoint_config(ckpt_path);
        model = std::make_unique<ChangeModel<float>>(cfg);
        load_checkpoint(ckpt_path, model->params());
    } else {
        cfg = resolve_config(g);
        model = std::make_unique<ChangeModel<float>>(cfg);
        std::cout << "no checkpoint given; analyzing with seeded initialization\n";
    }

    SamplePair pair;
    if (!a_path.empty() && !b_path.empty()) {
        pair.img_a = to_imagef(read_png(a_path));
        pair.img_b = to_imagef(read_png(b_path));
        pair.id = "pair";
    } else {
        auto samples = load_split(data_dir);
        const std::string want = id.empty() ? samples.front().id : id;
        bool found = false;
        for (auto& s : samples) {
            if (s.id == want) {
                pair = std::move(s);
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error("sample id not found in dataset: " + want);
    }

    SimilarityReport report = analyze_similarity(*model, pair);
    const std::string sim_dir = (fs::path(g.out_dir) / "similarity").string();
    write_similarity(sim_dir, report);
    std::printf("raw RGB cosine: %.6f; per-level maps in %s\n", report.rgb_cosine,
                sim_dir.c_str());
    return 0;
}

int cmd_render(const std::string& pred_path, const std::string& gt_path,
               const std::string& out_path) {
    Mask pred = mask_from_png(pred_path);
    Mask gt = mask_from_png(gt_path);
    write_png(out_path, render_confusion(pred, gt));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layer-exchange change detection kit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--set", g.overrides, "config override key.path=value (repeatable)");
    auto* seed_opt = app.add_option("--seed", g.seed, "run seed (overrides config)");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic bi-temporal dataset");

    std::string data_dir, val_dir, test_dir;
    double val_frac = 0.2;
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("--data", data_dir, "dataset directory (A/, B/, label/)")->required();
    train->add_option("--val-data", val_dir, "validation dataset directory");
    train->add_option("--val-frac", val_frac, "tail fraction for validation when --val-data absent");

    std::string ckpt_path;
    int patch = 0, stride = 0;
    auto* infer = app.add_subcommand("infer", "sliding-window inference over a dataset");
    infer->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    infer->add_option("--data", data_dir, "dataset directory")->required();
    infer->add_option("--patch", patch, "window size (multiple of 32)");
    infer->add_option("--stride", stride, "window stride");

    std::string pred_dir, run_label = "run";
    bool confusion_pngs = false, per_image = false;
    auto* eval = app.add_subcommand("eval", "score predicted masks against labels");
    eval->add_option("--pred", pred_dir, "directory of predicted masks")->required();
    eval->add_option("--data", data_dir, "dataset directory with label/")->required();
    eval->add_option("--label", run_label, "row label for the CSV report");
    eval->add_flag("--confusion", confusion_pngs, "write per-pair confusion renderings");
    eval->add_flag("--per-image", per_image, "also write per-image metrics");

    auto* ablate = app.add_subcommand("ablate", "train and score the 2x2 component matrix");
    ablate->add_option("--data", data_dir, "training dataset")->required();
    ablate->add_option("--val-data", val_dir, "validation dataset")->required();
    ablate->add_option("--test-data", test_dir, "test dataset (defaults to val)");

    std::string id, a_path, b_path;
    auto* analyze = app.add_subcommand("analyze-similarity",
                                       "per-level cosine analysis of an image pair");
    analyze->add_option("--checkpoint", ckpt_path, "trained checkpoint (optional)");
    analyze->add_option("--data", data_dir, "dataset directory");
    analyze->add_option("--id", id, "sample id within --data");
    analyze->add_option("--a", a_path, "first image PNG");
    analyze->add_option("--b", b_path, "second image PNG");

    std::string gt_path, out_path = "confusion.png";
    auto* render = app.add_subcommand("render-mask", "render a prediction/label confusion PNG");
    render->add_option("--pred", pred_dir, "predicted mask PNG")->required();
    render->add_option("--gt", gt_path, "ground-truth mask PNG")->required();
    render->add_option("--out", out_path, "output PNG path");

    CLI11_PARSE(app, argc, argv);
    g.seed_given = seed_opt->count() > 0;

    try {
        if (gen->parsed()) return cmd_gen_data(g);
        if (train->parsed()) return cmd_train(g, data_dir, val_dir, val_frac);
        if (infer->parsed()) return cmd_infer(g, ckpt_path, data_dir, patch, stride);
        if (eval->parsed()) return cmd_eval(g, pred_dir, data_dir, run_label, confusion_pngs, per_image);
        if (ablate->parsed()) return cmd_ablate(g, data_dir, val_dir, test_dir);
        if (analyze->parsed()) return cmd_analyze(g, ckpt_path, data_dir, id, a_path, b_path);
        if (render->parsed()) return cmd_render(pred_dir, gt_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
