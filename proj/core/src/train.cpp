#include "lexcd/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lexcd/checkpoint.hpp"

namespace lexcd {

void AdamW::step(ParamStore<float>& store, double lr_scale) {
    ++t_;
    const double lr = cfg_.lr * lr_scale;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& e : store.entries()) {
        if (!e.tensor.has_grad()) continue;
        const auto& g = e.tensor.grad();
        auto& p = e.tensor.raw_value();
        if (e.adam_m.empty()) {
            e.adam_m.assign(p.size(), 0.f);
            e.adam_v.assign(p.size(), 0.f);
        }
        for (size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            const double m = cfg_.beta1 * e.adam_m[i] + (1.0 - cfg_.beta1) * gi;
            const double v = cfg_.beta2 * e.adam_v[i] + (1.0 - cfg_.beta2) * gi * gi;
            e.adam_m[i] = static_cast<float>(m);
            e.adam_v[i] = static_cast<float>(v);
            const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.adam_eps) +
                                  cfg_.weight_decay * p[i];
            p[i] = static_cast<float>(p[i] - lr * update);
        }
    }
}

namespace {

struct BatchTensors {
    Tensor<float> a;
    Tensor<float> b;
    Mask target;
};

BatchTensors assemble(const std::vector<SamplePair>& set, const std::vector<size_t>& idx,
                      size_t begin, size_t end, bool do_augment, uint64_t aug_seed) {
    std::vector<SamplePair> augmented;
    std::vector<const ImageF*> imgs_a, imgs_b;
    std::vector<const Mask*> masks;
    for (size_t i = begin; i < end; ++i) {
        const SamplePair& s = set[idx[i]];
        if (do_augment) {
            augmented.push_back(augment(s, Rng::mix(aug_seed, idx[i])));
        }
    }
    size_t k = 0;
    for (size_t i = begin; i < end; ++i) {
        const SamplePair& s = do_augment ? augmented[k++] : set[idx[i]];
        imgs_a.push_back(&s.img_a);
        imgs_b.push_back(&s.img_b);
        masks.push_back(&s.mask);
    }
    return BatchTensors{images_to_tensor(imgs_a), images_to_tensor(imgs_b),
                        masks_to_batch(masks)};
}

}  // namespace

double lr_schedule_scale(const TrainConfig& cfg, uint64_t step, uint64_t total_steps) {
    if (cfg.lr_schedule != "cosine" || total_steps == 0) return 1.0;
    const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

std::vector<size_t> epoch_order(uint64_t seed, int epoch, size_t count) {
    std::vector<size_t> idx(count);
    for (size_t i = 0; i < count; ++i) idx[i] = i;
    Rng rng(Rng::mix(seed, 0x73687566ULL + static_cast<uint64_t>(epoch)));
    for (size_t i = count; i > 1; --i) {
        std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }
    return idx;
}

uint64_t epoch_aug_seed(uint64_t seed, int epoch) {
    return Rng::mix(seed, 0x617567ULL + static_cast<uint64_t>(epoch));
}

double evaluate_iou(const ChangeModel<float>& model, const std::vector<SamplePair>& samples,
                    int batch_size) {
    ConfusionCounts counts;
    std::vector<size_t> idx(samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t begin = 0; begin < samples.size(); begin += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(samples.size(), begin + static_cast<size_t>(batch_size));
        BatchTensors batch = assemble(samples, idx, begin, end, false, 0);
        const Mask pred = model.predict(batch.a, batch.b);
        counts += confusion(pred, batch.target);
    }
    const MetricSet m = metrics(counts);
    return m.iou;
}

TrainResult train_model(ChangeModel<float>& model, const std::vector<SamplePair>& train_set,
                        const std::vector<SamplePair>& val_set,
                        const std::string& checkpoint_path, const EpochCallback& on_epoch) {
    if (train_set.empty() || val_set.empty()) {
        throw std::invalid_argument("train_model: empty train or val split");
    }
    const TrainConfig& tc = model.config().train;
    const uint64_t seed = model.config().seed;
    AdamW opt(tc);
    TrainResult result;

    std::vector<float> best_params;
    std::vector<size_t> idx(train_set.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    const uint64_t batches_per_epoch =
        (train_set.size() + static_cast<size_t>(tc.batch_size) - 1) /
        static_cast<size_t>(tc.batch_size);
    const uint64_t total_steps = batches_per_epoch * static_cast<uint64_t>(tc.epochs);
    const bool want_train_iou = tc.early_stop_train_iou > 0.0;
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        idx = epoch_order(seed, epoch, train_set.size());
        const uint64_t aug_seed = epoch_aug_seed(seed, epoch);

        double loss_sum = 0.0;
        int batches = 0;
        for (size_t begin = 0; begin < idx.size(); begin += static_cast<size_t>(tc.batch_size)) {
            const size_t end = std::min(idx.size(), begin + static_cast<size_t>(tc.batch_size));
            BatchTensors batch = assemble(train_set, idx, begin, end, tc.augment, aug_seed);
            DecodeOutput<float> out = model.forward(batch.a, batch.b);
            Tensor<float> loss = model.loss(out, batch.target);
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("training diverged: non-finite loss " +
                                         std::to_string(loss_value) + " at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batches + 1));
            }
            model.params().zero_grads();
            loss.backward();
            opt.step(model.params(),
                     lr_schedule_scale(tc, opt.steps_taken(), total_steps));
            loss_sum += loss_value;
            ++batches;
        }

        EpochLog log;
        log.epoch = epoch;
        log.mean_loss = loss_sum / std::max(1, batches);
        log.val_iou = evaluate_iou(model, val_set, tc.batch_size);
        if (want_train_iou) log.train_iou = evaluate_iou(model, train_set, tc.batch_size);
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);

        if (result.best_epoch < 0 || log.val_iou > result.best_val_iou) {
            result.best_epoch = epoch;
            result.best_val_iou = log.val_iou;
            best_params.clear();
            for (const auto& e : model.params().entries()) {
                const auto& v = e.tensor.value();
                best_params.insert(best_params.end(), v.begin(), v.end());
            }
            if (!checkpoint_path.empty()) {
                CheckpointMeta meta;
                meta.config = model.config();
                meta.epoch = epoch;
                meta.best_val_iou = log.val_iou;
                meta.adam_step = opt.steps_taken();
                save_checkpoint(checkpoint_path, model.params(), meta);
            }
        }

        if (tc.early_stop_val_iou > 0.0 && log.val_iou >= tc.early_stop_val_iou &&
            (!want_train_iou || log.train_iou >= tc.early_stop_train_iou)) {
            break;
        }
    }

    // leave the model at its validation peak
    if (!best_params.empty()) {
        size_t offset = 0;
        for (auto& e : model.params().entries()) {
            auto& v = e.tensor.raw_value();
            std::copy_n(best_params.begin() + static_cast<long long>(offset), v.size(),
                        v.begin());
            offset += v.size();
        }
    }
    return result;
}

void write_train_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,mean_loss,val_iou,train_iou\n";
    char buf[128];
    for (const auto& l : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", l.epoch, l.mean_loss, l.val_iou,
                      l.train_iou);
        out << buf;
    }
}

}  // namespace lexcd
