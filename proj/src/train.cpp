#include "ff/train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ff/errors.hpp"

namespace ff {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ValidationError("TrainConfig: learning_rate must be positive");
    if (max_epochs < 1) throw ValidationError("TrainConfig: max_epochs must be >= 1");
    if (patience < 1) throw ValidationError("TrainConfig: patience must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("TrainConfig: train_fraction must be in (0,1)");
    if (knots < 2) throw ValidationError("TrainConfig: knots must be >= 2");
    if (flow_layers < 1) throw ValidationError("TrainConfig: flow_layers must be >= 1");
    if (hidden_width < 1 || hidden_depth < 0) throw ValidationError("TrainConfig: bad conditioner size");
}

FitDiagnostics train_early_stop(const std::vector<ParamTensor*>& params, const TrainConfig& cfg,
                                const std::function<diff::Var(diff::Tape&, bool)>& build_loss,
                                const std::function<void(int)>& on_epoch_start) {
    cfg.validate();
    diff::AdamState adam;
    adam.lr = cfg.learning_rate;

    FitDiagnostics diag;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_params;
    for (const ParamTensor* p : params) best_params.push_back(p->value);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (on_epoch_start) on_epoch_start(epoch);
        diff::zero_grads(params);
        double train_loss;
        {
            diff::Tape tape;
            diff::Var loss = build_loss(tape, true);
            train_loss = tape.scalar_value(loss);
            if (!std::isfinite(train_loss))
                throw TrainingError("training loss diverged (non-finite) at epoch " + std::to_string(epoch));
            try {
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw TrainingError("training failed at epoch " + std::to_string(epoch) + ": " + e.what());
            }
        }
        try {
            diff::adam_step(params, adam);
        } catch (const NumericError& e) {
            throw TrainingError("training failed at epoch " + std::to_string(epoch) + ": " + e.what());
        }

        double val_loss;
        {
            diff::Tape tape;
            diff::Var loss = build_loss(tape, false);
            val_loss = tape.scalar_value(loss);
        }
        diag.train_loss.push_back(train_loss);
        diag.val_loss.push_back(val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            diag.best_epoch = epoch;
            for (size_t i = 0; i < params.size(); ++i) best_params[i] = params[i]->value;
        } else if (epoch - diag.best_epoch >= cfg.patience) {
            break;
        }
    }

    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
    diag.best_val = best_val;
    return diag;
}

}  // namespace ff
