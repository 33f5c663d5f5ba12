#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "lexcd/ablation.hpp"
#include "lexcd/checkpoint.hpp"
#include "lexcd/infer.hpp"

using namespace lexcd;
using lexcd::testing::bitwise_equal;

namespace {

RunConfig fast_config() {
    RunConfig rc;
    rc.encoder.widths = {4, 6, 8, 12};
    rc.encoder.stem_width = 3;
    rc.encoder.blocks_per_stage = 1;
    rc.fpn.width = 8;
    rc.decoder.squeeze_ratio = 4;
    rc.data.size = 32;
    rc.train.patch = 32;
    rc.infer.patch = 32;
    rc.infer.stride = 16;
    rc.train.epochs = 2;
    rc.train.batch_size = 4;
    return rc;
}

std::vector<SamplePair> tiny_dataset(int count, uint64_t seed, int size = 32) {
    GenConfig cfg;
    cfg.size = size;
    cfg.count = count;
    return gen_synthetic(cfg, seed);
}

}  // namespace

TEST_SUITE_BEGIN("train_infer");

TEST_CASE("lr=0 freezes parameters and the validation IoU") {
    RunConfig rc = fast_config();
    rc.train.lr = 0.0;
    rc.train.epochs = 3;
    ChangeModel<float> model(rc);
    std::vector<float> before;
    for (const auto& e : model.params().entries()) {
        before.insert(before.end(), e.tensor.value().begin(), e.tensor.value().end());
    }
    auto train_set = tiny_dataset(8, 1);
    auto val_set = tiny_dataset(4, 2);
    TrainResult result = train_model(model, train_set, val_set);

    std::vector<float> after;
    for (const auto& e : model.params().entries()) {
        after.insert(after.end(), e.tensor.value().begin(), e.tensor.value().end());
    }
    CHECK(before == after);
    REQUIRE(result.log.size() == 3);
    CHECK(result.log[0].val_iou == result.log[1].val_iou);
    CHECK(result.log[1].val_iou == result.log[2].val_iou);
}

TEST_CASE("single-batch overfit reaches train IoU >= 0.95 in 200 steps") {
    RunConfig rc;
    rc.seed = 7;
    rc.encoder.widths = {8, 12, 16, 24};
    rc.encoder.stem_width = 4;
    rc.encoder.blocks_per_stage = 1;
    rc.fpn.width = 16;
    rc.data.size = 64;
    rc.train.patch = 64;
    rc.train.epochs = 200;  // 4 samples, batch 4: one step per epoch
    rc.train.batch_size = 4;
    rc.train.lr = 3e-3;
    rc.train.lr_schedule = "constant";
    rc.train.weight_decay = 0.0;
    rc.train.augment = false;
    ChangeModel<float> model(rc);
    auto train_set = tiny_dataset(4, rc.seed, 64);
    TrainResult result = train_model(model, train_set, train_set);
    const double train_iou = evaluate_iou(model, train_set, 4);
    CHECK(train_iou >= 0.95);
    CHECK(result.log.size() <= 200);
}

TEST_CASE("same seed, same machine: identical best epoch and loss trace") {
    auto run = [] {
        RunConfig rc = fast_config();
        rc.seed = 9;
        ChangeModel<float> model(rc);
        auto train_set = tiny_dataset(8, 5);
        auto val_set = tiny_dataset(4, 6);
        return train_model(model, train_set, val_set);
    };
    TrainResult r1 = run();
    TrainResult r2 = run();
    CHECK(r1.best_epoch == r2.best_epoch);
    REQUIRE(r1.log.size() == r2.log.size());
    for (size_t i = 0; i < r1.log.size(); ++i) {
        CHECK(r1.log[i].mean_loss == r2.log[i].mean_loss);
        CHECK(r1.log[i].val_iou == r2.log[i].val_iou);
    }
}

TEST_CASE("training aborts with a diagnostic on divergence") {
    RunConfig rc = fast_config();
    rc.train.lr = 1e9;  // guaranteed blow-up
    rc.train.epochs = 30;
    ChangeModel<float> model(rc);
    auto train_set = tiny_dataset(8, 7);
    auto val_set = tiny_dataset(4, 8);
    CHECK_THROWS_WITH_AS(train_model(model, train_set, val_set),
                         doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("slide_infer: image == patch equals a single forward pass bitwise") {
    RunConfig rc = fast_config();
    ChangeModel<float> model(rc);
    SamplePair s = tiny_dataset(1, 40)[0];
    Mask tiled = slide_infer(model, s.img_a, s.img_b, 32, 16);
    Mask direct = model.predict(images_to_tensor({&s.img_a}), images_to_tensor({&s.img_b}));
    CHECK(tiled.v == direct.v);
}

TEST_CASE("slide_infer: stride == patch equals independent tile concatenation") {
    RunConfig rc = fast_config();
    ChangeModel<float> model(rc);
    SamplePair s = tiny_dataset(1, 41, 64)[0];
    Mask tiled = slide_infer(model, s.img_a, s.img_b, 32, 32);
    for (int ty = 0; ty < 2; ++ty)
        for (int tx = 0; tx < 2; ++tx) {
            ImageF ca(32, 32), cb(32, 32);
            for (int ch = 0; ch < 3; ++ch)
                for (int y = 0; y < 32; ++y)
                    for (int x = 0; x < 32; ++x) {
                        ca.at(ch, y, x) = s.img_a.at(ch, ty * 32 + y, tx * 32 + x);
                        cb.at(ch, y, x) = s.img_b.at(ch, ty * 32 + y, tx * 32 + x);
                    }
            Mask tile = model.predict(images_to_tensor({&ca}), images_to_tensor({&cb}));
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    CHECK(tiled.at(0, ty * 32 + y, tx * 32 + x) == tile.at(0, y, x));
                }
        }
}

TEST_CASE("slide_infer: overlap averaging leaves tile-independent logits unchanged") {
    SUBCASE("constant logits") {
        TileForward stub = [](const Tensor<float>& a, const Tensor<float>&) {
            const Shape4 s = a.shape();
            Tensor<float> logits = Tensor<float>::zeros(Shape4{1, 2, s.h, s.w});
            for (long long i = 0; i < static_cast<long long>(s.h) * s.w; ++i) {
                logits.raw_value()[static_cast<size_t>(s.h) * s.w + i] = 0.7f;
            }
            return logits;
        };
        SamplePair s = tiny_dataset(1, 42, 64)[0];
        Mask ref = slide_infer(stub, s.img_a, s.img_b, 32, 32);
        for (uint8_t v : ref.v) CHECK(v == 1);
        for (int stride : {8, 16, 24}) {
            Mask m = slide_infer(stub, s.img_a, s.img_b, 32, stride);
            CHECK(m.v == ref.v);
        }
    }
    SUBCASE("per-pixel logits depending only on image content") {
        // every tile covering a pixel produces the same probability there, so
        // any overlap average must reproduce the single-tile mask
        TileForward stub = [](const Tensor<float>& a, const Tensor<float>& b) {
            const Shape4 s = a.shape();
            Tensor<float> logits = Tensor<float>::zeros(Shape4{1, 2, s.h, s.w});
            const long long plane = static_cast<long long>(s.h) * s.w;
            for (long long i = 0; i < plane; ++i) {
                const float diff = std::abs(a.value()[static_cast<size_t>(i)] -
                                            b.value()[static_cast<size_t>(i)]);
                logits.raw_value()[static_cast<size_t>(plane + i)] = 10.f * (diff - 0.3f);
            }
            return logits;
        };
        SamplePair s = tiny_dataset(1, 42, 64)[0];
        Mask ref = slide_infer(stub, s.img_a, s.img_b, 32, 32);
        bool has_change = false, has_static = false;
        for (uint8_t v : ref.v) (v ? has_change : has_static) = true;
        CHECK(has_change);
        CHECK(has_static);
        for (int stride : {8, 16, 24}) {
            Mask m = slide_infer(stub, s.img_a, s.img_b, 32, stride);
            CHECK(m.v == ref.v);
        }
    }
}

TEST_CASE("slide_infer input validation") {
    RunConfig rc = fast_config();
    ChangeModel<float> model(rc);
    SamplePair s = tiny_dataset(1, 43)[0];  // 32x32
    CHECK_THROWS_WITH_AS(slide_infer(model, s.img_a, s.img_b, 64, 32),
                         doctest::Contains("smaller than the patch"), std::invalid_argument);
    CHECK_THROWS_AS(slide_infer(model, s.img_a, s.img_b, 31, 16), std::invalid_argument);
    CHECK_THROWS_AS(slide_infer(model, s.img_a, s.img_b, 32, 0), std::invalid_argument);
}

TEST_CASE("checkpoint round trip reproduces probe logits bitwise") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "lexcd_ckpt_test.bin").string();
    RunConfig rc = fast_config();
    rc.seed = 77;
    ChangeModel<float> model(rc);
    auto train_set = tiny_dataset(8, 50);
    auto val_set = tiny_dataset(4, 51);
    train_model(model, train_set, val_set, path);

    SamplePair probe = tiny_dataset(1, 52)[0];
    Tensor<float> pa = images_to_tensor({&probe.img_a});
    Tensor<float> pb = images_to_tensor({&probe.img_b});
    DecodeOutput<float> before = model.forward(pa, pb);

    RunConfig stored = peek_checkpoint_config(path);
    ChangeModel<float> restored(stored);
    CheckpointMeta meta = load_checkpoint(path, restored.params());
    CHECK(meta.epoch >= 1);
    CHECK(config_digest(stored) == config_digest(rc));
    DecodeOutput<float> after = restored.forward(pa, pb);
    CHECK(bitwise_equal(before.main_logits, after.main_logits));

    // a second save of the same state is byte-identical
    const std::string path2 = path + ".2";
    save_checkpoint(path, restored.params(), meta);
    save_checkpoint(path2, restored.params(), meta);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("checkpoint rejects mismatched models") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "lexcd_ckpt_bad.bin").string();
    RunConfig rc = fast_config();
    ChangeModel<float> model(rc);
    CheckpointMeta meta;
    meta.config = rc;
    save_checkpoint(path, model.params(), meta);

    RunConfig other = fast_config();
    other.fpn.width = 4;
    ChangeModel<float> wrong(other);
    CHECK_THROWS_AS(load_checkpoint(path, wrong.params()), std::runtime_error);
    CHECK_THROWS_AS(peek_checkpoint_config("/nonexistent/x.bin"), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("ablation report: four rows, flag pattern, shared data stream") {
    RunConfig rc = fast_config();
    rc.train.epochs = 1;
    auto train_set = tiny_dataset(4, 60);
    auto val_set = tiny_dataset(2, 61);
    AblationReport report = run_ablation(rc, train_set, val_set, val_set);
    REQUIRE(report.rows.size() == 4);
    const bool expected[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
    for (int i = 0; i < 4; ++i) {
        CHECK(report.rows[static_cast<size_t>(i)].encoder_csdw == expected[i][0]);
        CHECK(report.rows[static_cast<size_t>(i)].decoder_led == expected[i][1]);
        CHECK(report.rows[static_cast<size_t>(i)].iou >= 0.0);
        CHECK(report.rows[static_cast<size_t>(i)].data_stream_digest ==
              report.rows[0].data_stream_digest);
    }

    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "lexcd_ablation_test.csv").string();
    write_ablation_csv(path, report);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "encoder_csdw,decoder_led,IoU");
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 4);
    fs::remove(path);
}

TEST_SUITE_END();
