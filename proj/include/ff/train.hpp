#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ff/adam.hpp"
#include "ff/tape.hpp"

namespace ff {

struct TrainConfig {
    double learning_rate = 5e-3;
    int max_epochs = 800;
    int patience = 100;
    double train_fraction = 0.9;
    int batch_size = 0;  // 0 = full batch
    int knots = 8;
    int flow_layers = 5;
    int hidden_width = 50;
    int hidden_depth = 4;
    bool resample_dequant_per_epoch = false;
    uint64_t seed = 0;

    void validate() const;
};

struct FitDiagnostics {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;  // 0-based epoch whose parameters were kept
    double best_val = 0.0;
};

// Full-batch Adam with early stopping on validation loss. Each epoch the
// callback records the loss graph for the requested split; gradients are
// taken on the training split only. Parameters are restored to the best
// validation epoch before returning; ties keep the earlier epoch.
// A NaN/Inf training loss aborts with TrainingError naming the epoch.
FitDiagnostics train_early_stop(const std::vector<ParamTensor*>& params, const TrainConfig& cfg,
                                const std::function<diff::Var(diff::Tape&, bool /*train_split*/)>& build_loss,
                                const std::function<void(int /*epoch*/)>& on_epoch_start = {});

}  // namespace ff
