#include <benchmark/benchmark.h>

#include "lexcd/csdw.hpp"
#include "lexcd/infer.hpp"
#include "lexcd/model.hpp"
#include "lexcd/train.hpp"

using namespace lexcd;

namespace {

Tensor<float> random_input(const Shape4& shape, uint64_t seed, bool requires_grad = false) {
    Rng rng(seed);
    std::vector<float> v(static_cast<size_t>(shape.numel()));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return Tensor<float>::from_vector(shape, std::move(v), requires_grad);
}

void BM_Conv2dForward(benchmark::State& state) {
    const int channels = static_cast<int>(state.range(0));
    const int hw = static_cast<int>(state.range(1));
    Tensor<float> x = random_input(Shape4{8, channels, hw, hw}, 1);
    Tensor<float> w = random_input(Shape4{channels, channels, 3, 3}, 2);
    Tensor<float> b = random_input(Shape4{channels, 1, 1, 1}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1));
    }
    state.SetItemsProcessed(state.iterations() * 8LL * channels * channels * hw * hw * 9);
}
BENCHMARK(BM_Conv2dForward)->Args({32, 16})->Args({128, 16})->Args({128, 32});

void BM_Conv2dTrainStep(benchmark::State& state) {
    const int channels = static_cast<int>(state.range(0));
    Tensor<float> x = random_input(Shape4{8, channels, 16, 16}, 1, true);
    Tensor<float> w = random_input(Shape4{channels, channels, 3, 3}, 2, true);
    Tensor<float> b = random_input(Shape4{channels, 1, 1, 1}, 3, true);
    for (auto _ : state) {
        x.zero_grad();
        w.zero_grad();
        b.zero_grad();
        Tensor<float> loss = sum(conv2d(x, w, b, 1, 1));
        loss.backward();
        benchmark::DoNotOptimize(loss.item());
    }
    state.SetItemsProcessed(state.iterations() * 3LL * 8 * channels * channels * 16 * 16 * 9);
}
BENCHMARK(BM_Conv2dTrainStep)->Arg(32)->Arg(128);

void BM_CsdwForward(benchmark::State& state) {
    const int channels = static_cast<int>(state.range(0));
    ParamStore<float> store;
    Rng init(4);
    CsdwParams<float> params = make_csdw(store, "csdw", channels, 3, false, init);
    Tensor<float> fa = random_input(Shape4{8, channels, 16, 16}, 5);
    Tensor<float> fb = random_input(Shape4{8, channels, 16, 16}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(csdw_forward(fa, fb, params).out_a.value().data());
    }
}
BENCHMARK(BM_CsdwForward)->Arg(32)->Arg(128);

void BM_ModelForward64(benchmark::State& state) {
    RunConfig cfg;
    ChangeModel<float> model(cfg);
    Tensor<float> a = random_input(Shape4{1, 3, 64, 64}, 7);
    Tensor<float> b = random_input(Shape4{1, 3, 64, 64}, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(a, b).main_logits.value().data());
    }
}
BENCHMARK(BM_ModelForward64);

void BM_TrainStep64(benchmark::State& state) {
    RunConfig cfg;
    ChangeModel<float> model(cfg);
    AdamW opt(cfg.train);
    Tensor<float> a = random_input(Shape4{8, 3, 64, 64}, 9);
    Tensor<float> b = random_input(Shape4{8, 3, 64, 64}, 10);
    Mask target(8, 64, 64);
    Rng rng(11);
    for (auto& v : target.v) v = rng.coin() ? 1 : 0;
    for (auto _ : state) {
        Tensor<float> loss = model.loss(model.forward(a, b), target);
        model.params().zero_grads();
        loss.backward();
        opt.step(model.params());
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_TrainStep64);

void BM_SlideInfer(benchmark::State& state) {
    RunConfig cfg;
    cfg.encoder.widths = {8, 12, 16, 24};
    cfg.encoder.stem_width = 4;
    cfg.fpn.width = 16;
    ChangeModel<float> model(cfg);
    GenConfig g;
    g.size = 128;
    g.count = 1;
    SamplePair s = gen_synthetic(g, 12)[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(slide_infer(model, s.img_a, s.img_b, 64, 32).v.data());
    }
}
BENCHMARK(BM_SlideInfer);

}  // namespace

BENCHMARK_MAIN();
