#pragma once

#include <cstdint>
#include <vector>

#include "ff/tensor.hpp"

namespace ff::diff {

struct AdamState {
    int64_t step = 0;
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

// Bias-corrected Adam update over the parameter list; moments are created on
// first use and must keep matching shapes afterwards. Throws NumericError on
// non-finite gradients.
void adam_step(const std::vector<ParamTensor*>& params, AdamState& state);

void zero_grads(const std::vector<ParamTensor*>& params);

}  // namespace ff::diff
