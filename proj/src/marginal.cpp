#include "ff/marginal.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"
#include "ff/rng.hpp"
#include "ff/spline_graph.hpp"
#include "ff/stats.hpp"

namespace ff::marg {

using diff::Tape;
using diff::Var;

UnivariateFlow UnivariateFlow::fit(std::span<const double> samples, const TrainConfig& cfg, uint64_t seed) {
    if (samples.size() < 50) throw ValidationError("fit_marginal_flow: need at least 50 samples");
    for (double x : samples)
        if (!std::isfinite(x)) throw ValidationError("fit_marginal_flow: samples must be finite");
    const double m = stats::mean(samples);
    const double sd = std::sqrt(stats::variance(samples));
    if (!(sd > 0.0))
        throw ValidationError("fit_marginal_flow: constant column; declare it discrete in the schema");

    // shuffled split
    std::vector<int> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng split_rng = Rng::substream(seed, "marginal-split");
    split_rng.shuffle(order);
    const size_t n_train = std::max<size_t>(1, static_cast<size_t>(cfg.train_fraction * samples.size()));
    Tensor train_x(static_cast<int>(n_train), 1);
    Tensor val_x(static_cast<int>(samples.size() - n_train), 1);
    for (size_t i = 0; i < samples.size(); ++i) {
        if (i < n_train)
            train_x(static_cast<int>(i), 0) = samples[static_cast<size_t>(order[i])];
        else
            val_x(static_cast<int>(i - n_train), 0) = samples[static_cast<size_t>(order[i])];
    }

    std::vector<ParamTensor> raw(static_cast<size_t>(cfg.flow_layers));
    std::vector<ParamTensor*> params;
    for (int l = 0; l < cfg.flow_layers; ++l) {
        raw[static_cast<size_t>(l)] = ParamTensor("spline" + std::to_string(l), 1, 3 * cfg.knots - 1);
        params.push_back(&raw[static_cast<size_t>(l)]);
    }

    const diff::SplineGraphConfig sg{cfg.knots, 1.0, 1e-3, 1e-3};
    const double log_half = std::log(0.5);
    auto build = [&](Tape& tape, bool train_split) {
        const Tensor& data = train_split ? train_x : val_x;
        Var x = tape.constant(data);
        Var h = tape.affine(x, 1.0 / sd, -m / sd);
        Var ld = tanh_logdet_graph(tape, h);
        h = tape.tanh_(h);
        for (auto& p : raw) {
            Var knotraw = tape.broadcast_rows(tape.param(p), data.rows);
            auto knots = diff::build_spline_knots(tape, knotraw, sg);
            auto ap = diff::rqs_apply_graph(tape, h, knots, sg);
            h = ap.y;
            ld = tape.add(ld, ap.logdet);
        }
        // constant log-densities: whitening 1/sd, final map onto (0,1)
        Var ll = tape.affine(ld, 1.0, -std::log(sd) + log_half);
        return tape.affine(tape.mean_all(ll), -1.0, 0.0);
    };

    train_early_stop(params, cfg, build);

    UnivariateFlow flow;
    std::vector<bij::Univariate> parts;
    parts.push_back(bij::affine_bijector(1.0 / sd, -m / sd));
    parts.push_back(bij::tanh_bijector());
    for (auto& p : raw)
        parts.push_back(bij::rqs_bijector(bij::RqsSpline::from_raw(p.value.v, cfg.knots, 1.0)));
    parts.push_back(bij::affine_between({-1.0, 1.0}, {0.0, 1.0}));
    flow.chain_ = bij::compose(std::move(parts));
    flow.trained_ = true;
    return flow;
}

UnivariateFlow UnivariateFlow::from_chain(bij::Chain c) {
    UnivariateFlow f;
    f.chain_ = std::move(c);
    f.trained_ = true;
    return f;
}

double UnivariateFlow::to_rank(double x) const {
    if (!trained_) throw ValidationError("UnivariateFlow: not trained");
    double u = bij::forward(chain_, x).y;
    return std::clamp(u, kRankClamp, 1.0 - kRankClamp);
}

double UnivariateFlow::from_rank(double u) const {
    if (!trained_) throw ValidationError("UnivariateFlow: not trained");
    u = std::clamp(u, kRankClamp, 1.0 - kRankClamp);
    return bij::inverse(chain_, u).y;
}

double UnivariateFlow::log_density(double x) const {
    if (!trained_) throw ValidationError("UnivariateFlow: not trained");
    return bij::forward(chain_, x).logdet;
}

std::vector<double> UnivariateFlow::to_ranks(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = to_rank(xs[i]);
    return out;
}

std::vector<double> UnivariateFlow::from_ranks(std::span<const double> us) const {
    std::vector<double> out(us.size());
    for (size_t i = 0; i < us.size(); ++i) out[i] = from_rank(us[i]);
    return out;
}

StepCdf StepCdf::from_samples(std::span<const double> xs) {
    if (xs.empty()) throw ValidationError("StepCdf: empty sample");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    StepCdf cdf;
    size_t i = 0;
    const double n = static_cast<double>(sorted.size());
    while (i < sorted.size()) {
        size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        cdf.values.push_back(sorted[i]);
        cdf.cum.push_back(static_cast<double>(j + 1) / n);
        i = j + 1;
    }
    cdf.cum.back() = 1.0;
    return cdf;
}

int StepCdf::index_of(double x) const {
    auto it = std::lower_bound(values.begin(), values.end(), x);
    if (it == values.end() || *it != x)
        throw ValidationError("StepCdf: value " + std::to_string(x) + " is not a known level");
    return static_cast<int>(it - values.begin());
}

double StepCdf::transform_one(double x, double v) const {
    const int idx = index_of(x);
    return f_left(idx) + v * (f_at(idx) - f_left(idx));
}

double StepCdf::inverse_one(double u) const {
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) return values.back();
    return values[static_cast<size_t>(it - cum.begin())];
}

std::vector<double> distributional_transform(std::span<const double> xs, const StepCdf& cdf,
                                             std::span<const double> v) {
    if (xs.size() != v.size()) throw DimensionError("distributional_transform: x/v size mismatch");
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!(v[i] > 0.0 && v[i] < 1.0))
            throw ValidationError("distributional_transform: auxiliary uniforms must lie in (0,1)");
        out[i] = cdf.transform_one(xs[i], v[i]);
    }
    return out;
}

std::vector<double> distributional_transform(std::span<const double> xs, const StepCdf& cdf, uint64_t seed) {
    Rng rng = Rng::substream(seed, "dequantise");
    std::vector<double> v(xs.size());
    for (double& x : v) x = rng.uniform();
    return distributional_transform(xs, cdf, v);
}

std::vector<double> inverse_distributional_transform(std::span<const double> us, const StepCdf& cdf) {
    std::vector<double> out(us.size());
    for (size_t i = 0; i < us.size(); ++i) out[i] = cdf.inverse_one(us[i]);
    return out;
}

}  // namespace ff::marg
