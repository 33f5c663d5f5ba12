#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lexcd/dataset.hpp"
#include "lexcd/metrics.hpp"
#include "lexcd/model.hpp"

namespace lexcd {

// Decoupled weight decay Adam. Steps iterate parameters in store order;
// state lives in the store's per-parameter slots.
class AdamW {
  public:
    explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

    // lr_scale multiplies the base learning rate (cosine schedule hook).
    void step(ParamStore<float>& store, double lr_scale = 1.0);
    uint64_t steps_taken() const { return t_; }
    void set_steps_taken(uint64_t t) { t_ = t; }

  private:
    TrainConfig cfg_;
    uint64_t t_ = 0;
};

// 1 at step 0 decaying to 0 at total_steps under the cosine schedule; 1
// everywhere for the constant schedule.
double lr_schedule_scale(const TrainConfig& cfg, uint64_t step, uint64_t total_steps);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double val_iou = 0.0;
    double train_iou = -1.0;  // -1 when not evaluated
};

struct TrainResult {
    int best_epoch = -1;
    double best_val_iou = 0.0;
    std::vector<EpochLog> log;
};

// Micro-averaged IoU of model predictions over a sample set.
double evaluate_iou(const ChangeModel<float>& model, const std::vector<SamplePair>& samples,
                    int batch_size);

// The deterministic data schedule, derived only from the run seed: shuffled
// sample order and augmentation stream seed for one epoch. Exposed so runs
// sharing a seed can prove they consume identical sample streams.
std::vector<size_t> epoch_order(uint64_t seed, int epoch, size_t count);
uint64_t epoch_aug_seed(uint64_t seed, int epoch);

// Shuffled minibatch AdamW training with per-epoch validation IoU; the model
// is left holding the weights of the best validation epoch, which are also
// written to checkpoint_path (empty to skip). Aborts on non-finite loss.
// Fully deterministic for a fixed config seed.
using EpochCallback = std::function<void(const EpochLog&)>;
TrainResult train_model(ChangeModel<float>& model, const std::vector<SamplePair>& train_set,
                        const std::vector<SamplePair>& val_set,
                        const std::string& checkpoint_path = "",
                        const EpochCallback& on_epoch = {});

void write_train_log(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace lexcd
