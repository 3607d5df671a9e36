#pragma once

#include <optional>
#include <vector>

#include "ff/rng.hpp"
#include "ff/tape.hpp"
#include "ff/tensor.hpp"

namespace ff::diff {

// Binary connectivity mask enforcing an autoregressive dependency order.
// Entry (i, j) = 1 allows input unit i to feed output unit j. Hidden layers
// connect when out_degree >= in_degree, the final layer strictly when
// out_degree > in_degree; composing the two gives outputs of degree d that
// depend only on inputs of degree < d. Context rows are all-ones.
struct AutoregressiveMask {
    std::vector<int> in_degrees;
    std::vector<int> out_degrees;
    Tensor mask;  // (in + context) x out

    static AutoregressiveMask build(const std::vector<int>& in_degrees, int context_dim,
                                    const std::vector<int>& out_degrees, bool strict);
};

// Masked multilayer perceptron producing conditioner outputs whose unit of
// degree d sees only inputs of degree < d plus the unmasked context, which is
// re-appended at every layer.
class MaskedMlp {
public:
    // out_degrees has one entry per output unit.
    MaskedMlp() = default;
    MaskedMlp(std::vector<int> in_degrees, int context_dim, std::vector<int> out_degrees, int hidden_width,
              int hidden_depth);

    // Hidden weights ~ U(+-1/sqrt(fan_in)); final layer zeroed when
    // zero_final so a fresh conditioner emits identity-spline parameters.
    void init(Rng& rng, bool zero_final = true);

    // x: n x in_dim (may be 0 columns), ctx: n x context_dim when present.
    Var forward(Tape& tape, Var x, std::optional<Var> ctx);

    // Plain (non-tape) evaluation for frozen models.
    Tensor forward_frozen(const Tensor& x, const Tensor* ctx) const;

    std::vector<ParamTensor*> parameters();
    std::vector<const ParamTensor*> parameters() const;

    int input_dim() const { return in_dim_; }
    int context_dim() const { return context_dim_; }
    int output_dim() const { return out_dim_; }

    struct Layer {
        ParamTensor weight;  // (fan_in) x (fan_out)
        ParamTensor bias;    // 1 x fan_out
        Tensor mask;
        bool is_final = false;
    };
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

private:
    int in_dim_ = 0;
    int context_dim_ = 0;
    int out_dim_ = 0;
    std::vector<Layer> layers_;
};

}  // namespace ff::diff
