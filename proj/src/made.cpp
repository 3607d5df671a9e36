#include "ff/made.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"

namespace ff::diff {

AutoregressiveMask AutoregressiveMask::build(const std::vector<int>& in_degrees, int context_dim,
                                             const std::vector<int>& out_degrees, bool strict) {
    AutoregressiveMask am;
    am.in_degrees = in_degrees;
    am.out_degrees = out_degrees;
    const int rows = static_cast<int>(in_degrees.size()) + context_dim;
    const int cols = static_cast<int>(out_degrees.size());
    am.mask = Tensor(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const bool is_ctx = i >= static_cast<int>(in_degrees.size());
        for (int j = 0; j < cols; ++j) {
            bool on;
            if (is_ctx)
                on = true;
            else if (strict)
                on = out_degrees[static_cast<size_t>(j)] > in_degrees[static_cast<size_t>(i)];
            else
                on = out_degrees[static_cast<size_t>(j)] >= in_degrees[static_cast<size_t>(i)];
            am.mask(i, j) = on ? 1.0 : 0.0;
        }
    }
    return am;
}

MaskedMlp::MaskedMlp(std::vector<int> in_degrees, int context_dim, std::vector<int> out_degrees,
                     int hidden_width, int hidden_depth)
    : in_dim_(static_cast<int>(in_degrees.size())),
      context_dim_(context_dim),
      out_dim_(static_cast<int>(out_degrees.size())) {
    if (hidden_depth < 0 || hidden_width < 1) throw ValidationError("MaskedMlp: bad width/depth");
    if (out_dim_ == 0) throw ValidationError("MaskedMlp: no output units");

    int dmin = 0, dmax = 1;
    if (!in_degrees.empty()) {
        dmin = *std::min_element(in_degrees.begin(), in_degrees.end());
        dmax = *std::max_element(out_degrees.begin(), out_degrees.end());
    }
    // Hidden degrees cycle through [dmin, dmax-1]; any value in that range is
    // reachable from some input and useful to some output.
    std::vector<int> hidden_degrees(static_cast<size_t>(hidden_width));
    const int span = std::max(1, dmax - dmin);
    for (int k = 0; k < hidden_width; ++k) hidden_degrees[static_cast<size_t>(k)] = dmin + (k % span);

    std::vector<int> prev = std::move(in_degrees);
    for (int layer = 0; layer <= hidden_depth; ++layer) {
        const bool final_layer = layer == hidden_depth;
        const std::vector<int>& outs = final_layer ? out_degrees : hidden_degrees;
        auto am = AutoregressiveMask::build(prev, context_dim_, outs, final_layer);
        Layer l;
        l.weight = ParamTensor("w" + std::to_string(layer), am.mask.rows, am.mask.cols);
        l.bias = ParamTensor("b" + std::to_string(layer), 1, am.mask.cols);
        l.mask = std::move(am.mask);
        l.is_final = final_layer;
        layers_.push_back(std::move(l));
        prev = hidden_degrees;
    }
}

void MaskedMlp::init(Rng& rng, bool zero_final) {
    for (Layer& l : layers_) {
        if (l.is_final && zero_final) {
            l.weight.value.fill(0.0);
        } else {
            const double s = 1.0 / std::sqrt(static_cast<double>(l.weight.value.rows));
            for (double& w : l.weight.value.v) w = rng.uniform(-s, s);
        }
        l.bias.value.fill(0.0);
        l.weight.zero_grad();
        l.bias.zero_grad();
    }
}

Var MaskedMlp::forward(Tape& tape, Var x, std::optional<Var> ctx) {
    if (in_dim_ > 0 && tape.val(x).cols != in_dim_) throw DimensionError("MaskedMlp: input width mismatch");
    if (context_dim_ > 0 && (!ctx || tape.val(*ctx).cols != context_dim_))
        throw DimensionError("MaskedMlp: context width mismatch");
    Var h = x;
    bool have_h = in_dim_ > 0;
    for (Layer& l : layers_) {
        Var input;
        if (have_h && ctx)
            input = tape.concat_cols({h, *ctx});
        else if (have_h)
            input = h;
        else if (ctx)
            input = *ctx;
        else
            throw DimensionError("MaskedMlp: no inputs at all");
        Var w = tape.param(l.weight);
        Var b = tape.param(l.bias);
        Var z = tape.add_row(tape.matmul_masked(input, w, &l.mask), b);
        h = l.is_final ? z : tape.tanh_(z);
        have_h = true;
    }
    return h;
}

Tensor MaskedMlp::forward_frozen(const Tensor& x, const Tensor* ctx) const {
    const int n = in_dim_ > 0 ? x.rows : (ctx ? ctx->rows : 0);
    Tensor h = x;
    bool have_h = in_dim_ > 0;
    for (const Layer& l : layers_) {
        int width = (have_h ? h.cols : 0) + (ctx ? ctx->cols : 0);
        Tensor input(n, width);
        for (int i = 0; i < n; ++i) {
            int off = 0;
            if (have_h)
                for (int j = 0; j < h.cols; ++j) input(i, off++) = h(i, j);
            if (ctx)
                for (int j = 0; j < ctx->cols; ++j) input(i, off++) = (*ctx)(i, j);
        }
        Tensor wm = l.weight.value;
        for (size_t i = 0; i < wm.v.size(); ++i) wm.v[i] *= l.mask.v[i];
        Tensor out = matmul_values(input, wm);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < out.cols; ++j) {
                double s = out(i, j) + l.bias.value(0, j);
                out(i, j) = l.is_final ? s : std::tanh(s);
            }
        h = std::move(out);
        have_h = true;
    }
    return h;
}

std::vector<ParamTensor*> MaskedMlp::parameters() {
    std::vector<ParamTensor*> ps;
    for (Layer& l : layers_) {
        ps.push_back(&l.weight);
        ps.push_back(&l.bias);
    }
    return ps;
}

std::vector<const ParamTensor*> MaskedMlp::parameters() const {
    std::vector<const ParamTensor*> ps;
    for (const Layer& l : layers_) {
        ps.push_back(&l.weight);
        ps.push_back(&l.bias);
    }
    return ps;
}

}  // namespace ff::diff
