#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lexcd/metrics.hpp"
#include "lexcd/rng.hpp"

using namespace lexcd;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("confusion: perfect, inverted, and loop-oracle cases") {
    SUBCASE("all-positive perfect prediction") {
        Mask m(1, 10, 10, 1);
        ConfusionCounts c = confusion(m, m);
        CHECK(c.tp == 100);
        CHECK(c.tn == 0);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    SUBCASE("inverted prediction has no true counts") {
        Rng rng(90);
        Mask gt(1, 8, 8);
        for (auto& v : gt.v) v = rng.coin() ? 1 : 0;
        Mask pred = gt;
        for (auto& v : pred.v) v = v ? 0 : 1;
        ConfusionCounts c = confusion(pred, gt);
        CHECK(c.tp == 0);
        CHECK(c.tn == 0);
        CHECK(c.fp + c.fn == 64);
    }
    SUBCASE("seeded random 32x32 pair matches a per-pixel loop oracle") {
        Rng rng(91);
        Mask pred(1, 32, 32), gt(1, 32, 32);
        for (auto& v : pred.v) v = rng.coin(0.4) ? 1 : 0;
        for (auto& v : gt.v) v = rng.coin(0.3) ? 1 : 0;
        ConfusionCounts c = confusion(pred, gt);
        uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const int p = pred.at(0, y, x);
                const int g = gt.at(0, y, x);
                tp += static_cast<uint64_t>(p == 1 && g == 1);
                tn += static_cast<uint64_t>(p == 0 && g == 0);
                fp += static_cast<uint64_t>(p == 1 && g == 0);
                fn += static_cast<uint64_t>(p == 0 && g == 1);
            }
        CHECK(c.tp == tp);
        CHECK(c.tn == tn);
        CHECK(c.fp == fp);
        CHECK(c.fn == fn);
        CHECK(c.total() == 1024);
    }
    SUBCASE("errors") {
        Mask a(1, 4, 4), b(1, 4, 5);
        CHECK_THROWS_AS(confusion(a, b), std::invalid_argument);
        Mask bad(1, 4, 4);
        bad.v[0] = 7;
        CHECK_THROWS_AS(confusion(bad, a), std::invalid_argument);
    }
}

TEST_CASE("metrics: worked example tp=5 fp=3 fn=2 tn=90") {
    MetricSet m = metrics(ConfusionCounts{5, 90, 3, 2});
    CHECK(m.iou == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.prec == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(m.rec == doctest::Approx(0.714286).epsilon(1e-6));
    CHECK(m.f1 == doctest::Approx(0.666667).epsilon(1e-6));
    CHECK(m.oa == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("metrics: perfect and degenerate counts") {
    MetricSet perfect = metrics(ConfusionCounts{50, 0, 0, 0});
    CHECK(perfect.iou == 1.0);
    CHECK(perfect.prec == 1.0);
    CHECK(perfect.rec == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.oa == 1.0);

    MetricSet empty_pred = metrics(ConfusionCounts{0, 90, 0, 10});
    CHECK(empty_pred.iou == 0.0);
    CHECK(empty_pred.prec == 0.0);
    CHECK_FALSE(empty_pred.prec_defined);
    CHECK(empty_pred.rec == 0.0);
    CHECK(empty_pred.rec_defined);

    CHECK_THROWS_AS(metrics(ConfusionCounts{}), std::invalid_argument);
}

TEST_CASE("F1 equals 2*IoU/(1+IoU) on randomized counts") {
    Rng rng(92);
    for (int trial = 0; trial < 500; ++trial) {
        ConfusionCounts c;
        c.tp = static_cast<uint64_t>(rng.uniform_int(1, 5000));
        c.fp = static_cast<uint64_t>(rng.uniform_int(0, 5000));
        c.fn = static_cast<uint64_t>(rng.uniform_int(0, 5000));
        c.tn = static_cast<uint64_t>(rng.uniform_int(0, 5000));
        MetricSet m = metrics(c);
        CHECK(std::abs(m.f1 - 2.0 * m.iou / (1.0 + m.iou)) < 1e-9);
    }
}

TEST_CASE("OA is exact on integer counts and order-independent") {
    ConfusionCounts c{13, 29, 7, 51};
    MetricSet m = metrics(c);
    CHECK(m.oa == (13.0 + 29.0) / 100.0);

    // permutation invariance: counts-only dependence
    Rng rng(93);
    Mask pred(1, 6, 6), gt(1, 6, 6);
    for (auto& v : pred.v) v = rng.coin() ? 1 : 0;
    for (auto& v : gt.v) v = rng.coin() ? 1 : 0;
    Mask pred_shuffled = pred, gt_shuffled = gt;
    for (size_t i = pred.v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(pred_shuffled.v[i - 1], pred_shuffled.v[j]);
        std::swap(gt_shuffled.v[i - 1], gt_shuffled.v[j]);
    }
    MetricSet a = metrics(confusion(pred, gt));
    MetricSet b = metrics(confusion(pred_shuffled, gt_shuffled));
    CHECK(a.iou == b.iou);
    CHECK(a.oa == b.oa);
    CHECK(a.f1 == b.f1);
}

TEST_CASE("shard additivity: counts from halves equal the single pass") {
    Rng rng(94);
    Mask pred(4, 8, 8), gt(4, 8, 8);
    for (auto& v : pred.v) v = rng.coin() ? 1 : 0;
    for (auto& v : gt.v) v = rng.coin() ? 1 : 0;
    auto slice = [](const Mask& m, int from, int to) {
        Mask out(to - from, m.h, m.w);
        std::copy(m.v.begin() + static_cast<long long>(from) * m.h * m.w,
                  m.v.begin() + static_cast<long long>(to) * m.h * m.w, out.v.begin());
        return out;
    };
    ConfusionCounts whole = confusion(pred, gt);
    ConfusionCounts merged = confusion(slice(pred, 0, 2), slice(gt, 0, 2));
    merged += confusion(slice(pred, 2, 4), slice(gt, 2, 4));
    CHECK(whole.tp == merged.tp);
    CHECK(whole.tn == merged.tn);
    CHECK(whole.fp == merged.fp);
    CHECK(whole.fn == merged.fn);
}

TEST_CASE("render_confusion: colors and exact inverse recovery") {
    SUBCASE("uniform cases") {
        Mask ones(1, 4, 4, 1), zeros(1, 4, 4, 0);
        ImageU8 white = render_confusion(ones, ones);
        ImageU8 green = render_confusion(ones, zeros);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                CHECK(white.at(y, x, 0) == 255);
                CHECK(white.at(y, x, 1) == 255);
                CHECK(white.at(y, x, 2) == 255);
                CHECK(green.at(y, x, 0) == 0);
                CHECK(green.at(y, x, 1) == 255);
                CHECK(green.at(y, x, 2) == 0);
            }
    }
    SUBCASE("mixed seeded pair: per-pixel oracle and inverse") {
        Rng rng(95);
        Mask pred(1, 16, 16), gt(1, 16, 16);
        for (auto& v : pred.v) v = rng.coin() ? 1 : 0;
        for (auto& v : gt.v) v = rng.coin() ? 1 : 0;
        ImageU8 img = render_confusion(pred, gt);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const bool p = pred.at(0, y, x) != 0;
                const bool g = gt.at(0, y, x) != 0;
                uint8_t expect[3] = {0, 0, 0};
                if (p && g) expect[0] = expect[1] = expect[2] = 255;   // white
                else if (p && !g) expect[1] = 255;                     // green
                else if (!p && g) expect[0] = 255;                     // red
                CHECK(img.at(y, x, 0) == expect[0]);
                CHECK(img.at(y, x, 1) == expect[1]);
                CHECK(img.at(y, x, 2) == expect[2]);

                // colors decode uniquely back to (pred, gt)
                const bool dec_p = img.at(y, x, 1) == 255;  // white or green
                const bool dec_g = (img.at(y, x, 0) == 255 && img.at(y, x, 1) == 255) ||
                                   (img.at(y, x, 0) == 255 && img.at(y, x, 1) == 0);
                CHECK(dec_p == p);
                CHECK(dec_g == g);
            }
    }
}

TEST_CASE("metrics CSV uses percent with two decimals") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "lexcd_metrics_test.csv").string();
    write_metrics_csv(path, {{"run1", metrics(ConfusionCounts{5, 90, 3, 2})}});
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "run,OA,IoU,F1,Rec,Prec");
    CHECK(row == "run1,95.00,50.00,66.67,71.43,62.50");
    fs::remove(path);
}

TEST_SUITE_END();
