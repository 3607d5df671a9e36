#include "ff/adam.hpp"

#include <cmath>

#include "ff/errors.hpp"

namespace ff::diff {

void adam_step(const std::vector<ParamTensor*>& params, AdamState& state) {
    if (state.lr <= 0.0) throw ValidationError("adam_step: learning rate must be positive");
    if (state.m.empty()) {
        for (const ParamTensor* p : params) {
            state.m.emplace_back(p->value.rows, p->value.cols);
            state.v.emplace_back(p->value.rows, p->value.cols);
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam_step: state/parameter count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t k = 0; k < params.size(); ++k) {
        ParamTensor& p = *params[k];
        if (!p.grad.same_shape(p.value)) throw DimensionError("adam_step: grad shape mismatch for " + p.name);
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        if (!m.same_shape(p.value)) throw DimensionError("adam_step: moment shape mismatch for " + p.name);
        for (size_t i = 0; i < p.value.v.size(); ++i) {
            const double g = p.grad.v[i];
            if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in " + p.name);
            m.v[i] = state.beta1 * m.v[i] + (1.0 - state.beta1) * g;
            v.v[i] = state.beta2 * v.v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m.v[i] / bc1;
            const double vhat = v.v[i] / bc2;
            p.value.v[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void zero_grads(const std::vector<ParamTensor*>& params) {
    for (ParamTensor* p : params) p->zero_grad();
}

}  // namespace ff::diff
