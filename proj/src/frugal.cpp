#include "ff/frugal.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"
#include "ff/rng.hpp"
#include "ff/spline_graph.hpp"
#include "ff/stats.hpp"

namespace ff::frugal {

using diff::Tape;
using diff::Var;

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kRankEps = 1e-6;
}  // namespace

std::string to_string(MarginVariant v) {
    switch (v) {
        case MarginVariant::ParametricGaussian: return "gaussian";
        case MarginVariant::NsfAteShift: return "nsf-ate-shift";
        case MarginVariant::NsfUnconditional: return "nsf-unconditional";
    }
    return "?";
}

MarginVariant margin_variant_from_string(const std::string& s) {
    if (s == "gaussian") return MarginVariant::ParametricGaussian;
    if (s == "nsf-ate-shift") return MarginVariant::NsfAteShift;
    if (s == "nsf-unconditional") return MarginVariant::NsfUnconditional;
    throw ValidationError("unknown margin variant '" + s + "'");
}

bij::Chain NsfMarginParams::chain() const {
    std::vector<bij::Univariate> parts;
    parts.push_back(bij::affine_bijector(1.0 / whiten_sd, -whiten_mean / whiten_sd));
    parts.push_back(bij::tanh_bijector());
    for (const auto& s : layers) parts.push_back(bij::rqs_bijector(s));
    parts.push_back(bij::affine_between({-1.0, 1.0}, {0.0, 1.0}));
    return bij::compose(std::move(parts));
}

double FrugalFlowModel::estimated_ate() const {
    if (heterogeneous())
        throw ValidationError("estimated_ate: heterogeneous model; use conditional_ate(w)");
    switch (variant) {
        case MarginVariant::ParametricGaussian: return gaussian.t_coef;
        case MarginVariant::NsfAteShift: return nsf.ate_shift;
        case MarginVariant::NsfUnconditional:
            throw ValidationError(
                "estimated_ate: the unconditional spline margin carries no treatment effect; "
                "fit the gaussian or nsf-ate-shift variant");
    }
    throw ValidationError("estimated_ate: unknown variant");
}

double FrugalFlowModel::conditional_ate(std::span<const double> w) const {
    if (!heterogeneous()) throw ValidationError("conditional_ate: model was fitted without a W subset");
    if (w.size() != w_cols.size()) throw DimensionError("conditional_ate: expected one value per W column");
    double ate = gaussian.t_coef;
    for (size_t j = 0; j < w.size(); ++j) ate += gaussian.tw_coef[j] * w[j];
    return ate;
}

double FrugalFlowModel::margin_rank_one(double y, double t, std::span<const double> w) const {
    switch (variant) {
        case MarginVariant::ParametricGaussian: {
            double mu = gaussian.intercept + gaussian.t_coef * t;
            for (size_t j = 0; j < w.size(); ++j)
                mu += gaussian.w_coef[j] * w[j] + gaussian.tw_coef[j] * w[j] * t;
            double v = stats::normal_cdf((y - mu) / std::exp(gaussian.log_sigma));
            return std::clamp(v, kRankEps, 1.0 - kRankEps);
        }
        case MarginVariant::NsfAteShift: {
            double v = bij::forward(nsf.chain(), y - nsf.ate_shift * t).y;
            return std::clamp(v, kRankEps, 1.0 - kRankEps);
        }
        case MarginVariant::NsfUnconditional: {
            double v = bij::forward(nsf.chain(), y).y;
            return std::clamp(v, kRankEps, 1.0 - kRankEps);
        }
    }
    throw ValidationError("margin_rank_one: unknown variant");
}

double FrugalFlowModel::margin_log_density_one(double y, double t, std::span<const double> w) const {
    switch (variant) {
        case MarginVariant::ParametricGaussian: {
            double mu = gaussian.intercept + gaussian.t_coef * t;
            for (size_t j = 0; j < w.size(); ++j)
                mu += gaussian.w_coef[j] * w[j] + gaussian.tw_coef[j] * w[j] * t;
            double sigma = std::exp(gaussian.log_sigma);
            double zval = (y - mu) / sigma;
            return -0.5 * zval * zval - 0.5 * kLogTwoPi - gaussian.log_sigma;
        }
        case MarginVariant::NsfAteShift: return bij::forward(nsf.chain(), y - nsf.ate_shift * t).logdet;
        case MarginVariant::NsfUnconditional: return bij::forward(nsf.chain(), y).logdet;
    }
    throw ValidationError("margin_log_density_one: unknown variant");
}

double FrugalFlowModel::margin_inverse(double v, double t, std::span<const double> w) const {
    v = std::clamp(v, kRankEps, 1.0 - kRankEps);
    switch (variant) {
        case MarginVariant::ParametricGaussian: {
            double mu = gaussian.intercept + gaussian.t_coef * t;
            for (size_t j = 0; j < w.size(); ++j)
                mu += gaussian.w_coef[j] * w[j] + gaussian.tw_coef[j] * w[j] * t;
            return mu + std::exp(gaussian.log_sigma) * stats::normal_quantile(v);
        }
        case MarginVariant::NsfAteShift: return bij::inverse(nsf.chain(), v).y + nsf.ate_shift * t;
        case MarginVariant::NsfUnconditional: return bij::inverse(nsf.chain(), v).y;
    }
    throw ValidationError("margin_inverse: unknown variant");
}

double FrugalFlowModel::margin_inverse_t0(double v) const {
    if (heterogeneous())
        throw ValidationError("margin_inverse_t0: heterogeneous model needs margin_inverse(v, t, w)");
    return margin_inverse(v, 0.0, {});
}

std::vector<double> FrugalFlowModel::causal_margin_ranks(std::span<const double> y,
                                                         std::span<const double> t) const {
    if (y.size() != t.size()) throw DimensionError("causal_margin_ranks: y/t size mismatch");
    if (heterogeneous())
        throw ValidationError("causal_margin_ranks: heterogeneous model requires per-row W values");
    std::vector<double> v(y.size());
    for (size_t i = 0; i < y.size(); ++i) v[i] = margin_rank_one(y[i], t[i]);
    return v;
}

Tensor FrugalFlowModel::covariate_ranks(const Tensor& z, uint64_t seed) const {
    if (z.cols != static_cast<int>(handlers.size()))
        throw DimensionError("covariate_ranks: column count mismatch");
    Tensor v(z.rows, z.cols);
    for (int j = 0; j < z.cols; ++j) {
        std::vector<double> col(static_cast<size_t>(z.rows));
        for (int i = 0; i < z.rows; ++i) col[static_cast<size_t>(i)] = z(i, j);
        std::vector<double> ranks;
        const ColumnHandler& h = handlers[static_cast<size_t>(j)];
        if (h.discrete)
            ranks = marg::distributional_transform(col, h.cdf,
                                                   Rng::derive_seed(seed, "dequantise-z" + std::to_string(j)));
        else
            ranks = h.flow.to_ranks(col);
        for (int i = 0; i < z.rows; ++i) v(i, j) = ranks[static_cast<size_t>(i)];
    }
    return v;
}

Tensor FrugalFlowModel::covariates_from_ranks(const Tensor& v) const {
    if (v.cols != static_cast<int>(handlers.size()))
        throw DimensionError("covariates_from_ranks: column count mismatch");
    Tensor z(v.rows, v.cols);
    for (int j = 0; j < v.cols; ++j) {
        const ColumnHandler& h = handlers[static_cast<size_t>(j)];
        for (int i = 0; i < v.rows; ++i)
            z(i, j) = h.discrete ? h.cdf.inverse_one(v(i, j)) : h.flow.from_rank(v(i, j));
    }
    return z;
}

namespace {

// Copula input columns in flow-position order: plain models put the margin
// rank first; heterogeneous models sandwich it between the W and W-bar blocks.
std::vector<int> copula_column_order(const FrugalFlowModel& m) {
    std::vector<int> order;
    if (!m.heterogeneous()) {
        for (size_t j = 0; j < m.handlers.size(); ++j) order.push_back(static_cast<int>(j));
        return order;
    }
    for (int j : m.w_cols) order.push_back(j);
    for (size_t j = 0; j < m.handlers.size(); ++j)
        if (std::find(m.w_cols.begin(), m.w_cols.end(), static_cast<int>(j)) == m.w_cols.end())
            order.push_back(static_cast<int>(j));
    return order;
}

}  // namespace

FrugalFlowModel::LogLik FrugalFlowModel::log_likelihood(std::span<const double> y, std::span<const double> t,
                                                        const Tensor& v_z) const {
    if (static_cast<int>(y.size()) != v_z.rows || y.size() != t.size())
        throw DimensionError("log_likelihood: batch size mismatch");
    const int n = v_z.rows;
    const int margin_pos = heterogeneous() ? static_cast<int>(w_cols.size()) : 0;
    const auto order = copula_column_order(*this);

    Tensor v(n, v_z.cols + 1);
    std::vector<double> wrow(w_cols.size());
    std::vector<double> margin_ld(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (size_t j = 0; j < w_cols.size(); ++j) {
            const ColumnHandler& h = handlers[static_cast<size_t>(w_cols[j])];
            // the margin conditions on W values, recovered from ranks
            wrow[j] = h.discrete ? h.cdf.inverse_one(v_z(i, w_cols[j])) : h.flow.from_rank(v_z(i, w_cols[j]));
        }
        double v1 = margin_rank_one(y[static_cast<size_t>(i)], t[static_cast<size_t>(i)], wrow);
        margin_ld[static_cast<size_t>(i)] =
            margin_log_density_one(y[static_cast<size_t>(i)], t[static_cast<size_t>(i)], wrow);
        int pos = 0;
        for (size_t k = 0; k < order.size(); ++k) {
            if (pos == margin_pos) ++pos;
            v(i, pos++) = v_z(i, order[k]);
        }
        v(i, margin_pos) = v1;
    }
    std::vector<double> cop_ld = copula_flow.log_density(v);

    LogLik out;
    for (int i = 0; i < n; ++i) {
        const double m = margin_ld[static_cast<size_t>(i)];
        const double cl = cop_ld[static_cast<size_t>(i)];
        if (!std::isfinite(m) || !std::isfinite(cl))
            throw NumericError("log_likelihood: non-finite value at row " + std::to_string(i));
        out.margin += m;
        out.copula += cl;
    }
    out.margin /= n;
    out.copula /= n;
    out.total = out.margin + out.copula;
    return out;
}

double FrugalFlowModel::joint_log_density_row(std::span<const double> z, double y, double t,
                                              uint64_t seed) const {
    if (z.size() != handlers.size()) throw DimensionError("joint_log_density_row: covariate count mismatch");
    Tensor zrow(1, static_cast<int>(z.size()));
    for (size_t j = 0; j < z.size(); ++j) zrow(0, static_cast<int>(j)) = z[j];
    Tensor vz = covariate_ranks(zrow, seed);
    double ll = 0.0;
    for (size_t j = 0; j < handlers.size(); ++j) {
        const ColumnHandler& h = handlers[j];
        if (h.discrete) {
            int idx = h.cdf.index_of(z[j]);
            ll += std::log(h.cdf.f_at(idx) - h.cdf.f_left(idx));
        } else {
            ll += h.flow.log_density(z[j]);
        }
    }
    std::vector<double> yv{y}, tv{t};
    LogLik rest = log_likelihood(yv, tv, vz);
    return ll + rest.total;
}

namespace {

struct MarginParamSet {
    ParamTensor intercept{"margin.intercept", 1, 1};
    ParamTensor t_coef{"margin.t_coef", 1, 1};
    ParamTensor log_sigma{"margin.log_sigma", 1, 1};
    ParamTensor w_coef;
    ParamTensor tw_coef;
    std::vector<ParamTensor> spline_raw;
    ParamTensor ate_shift{"margin.ate_shift", 1, 1};
    double whiten_mean = 0.0, whiten_sd = 1.0;
};

struct SplitTensors {
    Tensor y, t, vz, w, tw;
};

// {v1, per-row log density} of the causal margin on the tape
struct MarginGraph {
    Var v1;
    Var ld;
};

MarginGraph build_margin_graph(Tape& tape, MarginVariant variant, MarginParamSet& mp, const SplitTensors& s,
                               const TrainConfig& cfg) {
    const int n = s.y.rows;
    Var y = tape.constant(s.y);
    Var t = tape.constant(s.t);
    MarginGraph g;
    if (variant == MarginVariant::ParametricGaussian) {
        Var mu = tape.add_scalar_var(tape.mul_scalar_var(t, tape.param(mp.t_coef)), tape.param(mp.intercept));
        if (s.w.cols > 0) {
            mu = tape.add(mu, tape.matmul(tape.constant(s.w), tape.param(mp.w_coef)));
            mu = tape.add(mu, tape.matmul(tape.constant(s.tw), tape.param(mp.tw_coef)));
        }
        Var ls = tape.param(mp.log_sigma);
        Var inv_sigma = tape.exp_(tape.affine(ls, -1.0, 0.0));
        Var zval = tape.mul_scalar_var(tape.sub(y, mu), inv_sigma);
        g.v1 = diff::clamp_unit_interval(tape, tape.normal_cdf_(zval), kRankEps);
        Var ld = tape.affine(tape.square_(zval), -0.5, -0.5 * kLogTwoPi);
        g.ld = tape.add_scalar_var(ld, tape.affine(ls, -1.0, 0.0));
        return g;
    }
    Var y0 = y;
    if (variant == MarginVariant::NsfAteShift)
        y0 = tape.sub(y, tape.mul_scalar_var(t, tape.param(mp.ate_shift)));
    Var h = tape.affine(y0, 1.0 / mp.whiten_sd, -mp.whiten_mean / mp.whiten_sd);
    Var ld = diff::tanh_logdet_graph(tape, h);
    h = tape.tanh_(h);
    const diff::SplineGraphConfig sg{cfg.knots, 1.0, 1e-3, 1e-3};
    for (auto& p : mp.spline_raw) {
        Var raw = tape.broadcast_rows(tape.param(p), n);
        auto knots = diff::build_spline_knots(tape, raw, sg);
        auto ap = diff::rqs_apply_graph(tape, h, knots, sg);
        h = ap.y;
        ld = tape.add(ld, ap.logdet);
    }
    g.v1 = diff::clamp_unit_interval(tape, tape.affine(h, 0.5, 0.5), kRankEps);
    g.ld = tape.affine(ld, 1.0, -std::log(mp.whiten_sd) + std::log(0.5));
    return g;
}

FrugalFlowModel fit_impl(const Dataset& data, MarginVariant variant, std::vector<int> w_cols,
                         const TrainConfig& cfg) {
    data.validate();
    if (data.rows() < 100)
        throw ValidationError("fit_frugal_flow: fewer than 100 rows is insufficient for a joint fit");
    cfg.validate();
    const int d = data.n_covariates();
    if (!w_cols.empty()) {
        std::sort(w_cols.begin(), w_cols.end());
        if (std::adjacent_find(w_cols.begin(), w_cols.end()) != w_cols.end())
            throw ValidationError("fit_heterogeneous_frugal_flow: duplicate W column");
        for (int j : w_cols)
            if (j < 0 || j >= d) throw ValidationError("fit_heterogeneous_frugal_flow: W column out of range");
        if (static_cast<int>(w_cols.size()) >= d)
            throw ValidationError(
                "fit_heterogeneous_frugal_flow: W must be a strict covariate subset; use fit_frugal_flow for "
                "the full set");
        if (variant != MarginVariant::ParametricGaussian)
            throw ValidationError("fit_heterogeneous_frugal_flow: only the gaussian margin conditions on W");
    }

    FrugalFlowModel model;
    model.schema = data.schema;
    model.variant = variant;
    model.w_cols = w_cols;
    model.train_config = cfg;

    // marginal flows are trained first and then held fixed
    const auto cov_idx = data.schema.covariate_indices();
    model.handlers.resize(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
        const SchemaCol& sc = data.schema.cols[static_cast<size_t>(cov_idx[static_cast<size_t>(j)])];
        auto col = data.z_col(j);
        ColumnHandler& h = model.handlers[static_cast<size_t>(j)];
        if (sc.kind == ColKind::Discrete) {
            h.discrete = true;
            h.cdf = marg::StepCdf::from_samples(col);
        } else {
            h.flow = marg::UnivariateFlow::fit(col, cfg, Rng::derive_seed(cfg.seed, "marginal-" + sc.name));
        }
    }

    // stratified train/validation split
    std::vector<int> idx0, idx1;
    for (int64_t i = 0; i < data.rows(); ++i)
        (data.t[static_cast<size_t>(i)] == 1.0 ? idx1 : idx0).push_back(static_cast<int>(i));
    Rng split_rng = Rng::substream(cfg.seed, "frugal-split");
    split_rng.shuffle(idx0);
    split_rng.shuffle(idx1);
    std::vector<int> train_idx, val_idx;
    auto divide = [&](const std::vector<int>& group) {
        size_t ntr = std::max<size_t>(1, static_cast<size_t>(cfg.train_fraction * group.size()));
        for (size_t i = 0; i < group.size(); ++i) (i < ntr ? train_idx : val_idx).push_back(group[i]);
    };
    divide(idx0);
    divide(idx1);
    if (val_idx.empty()) val_idx.push_back(train_idx.back());

    const int n_w = static_cast<int>(w_cols.size());
    const std::vector<int> order = copula_column_order(model);  // covariate columns in position order

    SplitTensors train_s, val_s;
    auto fill_split = [&](const std::vector<int>& rows, const Tensor& vz_full, SplitTensors& s) {
        const int n = static_cast<int>(rows.size());
        s.y = Tensor(n, 1);
        s.t = Tensor(n, 1);
        s.vz = Tensor(n, d);
        s.w = Tensor(n, n_w);
        s.tw = Tensor(n, n_w);
        for (int i = 0; i < n; ++i) {
            const int r = rows[static_cast<size_t>(i)];
            s.y(i, 0) = data.y[static_cast<size_t>(r)];
            s.t(i, 0) = data.t[static_cast<size_t>(r)];
            for (int j = 0; j < d; ++j) s.vz(i, j) = vz_full(r, order[static_cast<size_t>(j)]);
            for (int j = 0; j < n_w; ++j) {
                s.w(i, j) = data.z(r, w_cols[static_cast<size_t>(j)]);
                s.tw(i, j) = s.w(i, j) * s.t(i, 0);
            }
        }
    };
    auto rebuild_splits = [&](uint64_t dequant_seed) {
        Tensor vz_full = model.covariate_ranks(data.z, dequant_seed);
        fill_split(train_idx, vz_full, train_s);
        fill_split(val_idx, vz_full, val_s);
    };
    rebuild_splits(cfg.seed);

    // Margin parameters start at the arm-wise moment estimates. Adam moves a
    // coordinate by roughly the learning rate per epoch, so a zero start
    // cannot reach a distant treatment coefficient within the epoch budget;
    // starting from the conditional (difference-of-means) estimate leaves the
    // joint fit only the conditional-to-marginal correction to make.
    MarginParamSet mp;
    {
        std::vector<double> y0, y1;
        for (int i = 0; i < train_s.y.rows; ++i)
            (train_s.t(i, 0) == 1.0 ? y1 : y0).push_back(train_s.y(i, 0));
        std::vector<double> yall(train_s.y.v);
        const double ysd_all = std::sqrt(stats::variance(yall));
        if (!(ysd_all > 0.0)) throw ValidationError("fit_frugal_flow: outcome is constant");
        double dom = 0.0, base = stats::mean(yall), sd = ysd_all;
        if (!y0.empty() && !y1.empty()) {
            dom = stats::mean(y1) - stats::mean(y0);
            base = stats::mean(y0);
            const double n0 = static_cast<double>(y0.size()), n1 = static_cast<double>(y1.size());
            double pooled = ((n1 - 1.0) * stats::variance(y1) + (n0 - 1.0) * stats::variance(y0)) /
                            std::max(1.0, n0 + n1 - 2.0);
            if (pooled > 0.0) sd = std::sqrt(pooled);
        }
        mp.intercept.value.v[0] = base;
        mp.t_coef.value.v[0] = dom;
        mp.ate_shift.value.v[0] = dom;
        mp.log_sigma.value.v[0] = std::log(sd);
        // variant (ii) whitens the shift-corrected outcome; variant (iii)
        // models the raw margin
        std::vector<double> resid(yall);
        if (variant == MarginVariant::NsfAteShift)
            for (int i = 0; i < train_s.y.rows; ++i)
                if (train_s.t(i, 0) == 1.0) resid[static_cast<size_t>(i)] -= dom;
        mp.whiten_mean = stats::mean(resid);
        double rsd = std::sqrt(stats::variance(resid));
        mp.whiten_sd = rsd > 0.0 ? rsd : ysd_all;
        mp.w_coef = ParamTensor("margin.w_coef", n_w, 1);
        mp.tw_coef = ParamTensor("margin.tw_coef", n_w, 1);
        if (variant != MarginVariant::ParametricGaussian) {
            mp.spline_raw.resize(static_cast<size_t>(cfg.flow_layers));
            for (int l = 0; l < cfg.flow_layers; ++l)
                mp.spline_raw[static_cast<size_t>(l)] =
                    ParamTensor("margin.spline" + std::to_string(l), 1, 3 * cfg.knots - 1);
        }
    }

    model.copula_flow = w_cols.empty()
                            ? copula::CopulaFlow::standard(d, cfg, Rng::derive_seed(cfg.seed, "copula"))
                            : copula::CopulaFlow::heterogeneous(n_w, d - n_w, cfg,
                                                                Rng::derive_seed(cfg.seed, "copula"));

    std::vector<ParamTensor*> params = model.copula_flow.parameters();
    if (variant == MarginVariant::ParametricGaussian) {
        params.push_back(&mp.intercept);
        params.push_back(&mp.t_coef);
        params.push_back(&mp.log_sigma);
        if (n_w > 0) {
            params.push_back(&mp.w_coef);
            params.push_back(&mp.tw_coef);
        }
    } else {
        for (auto& p : mp.spline_raw) params.push_back(&p);
        if (variant == MarginVariant::NsfAteShift) params.push_back(&mp.ate_shift);
    }

    const int margin_pos = n_w;
    auto build = [&](Tape& tape, bool train_split) {
        const SplitTensors& s = train_split ? train_s : val_s;
        MarginGraph mg = build_margin_graph(tape, variant, mp, s, cfg);
        Var vz_const = tape.constant(s.vz);
        std::vector<Var> cols;
        int zcol = 0;
        for (int pos = 0; pos < d + 1; ++pos) {
            if (pos == margin_pos)
                cols.push_back(mg.v1);
            else {
                cols.push_back(tape.slice_cols(vz_const, zcol, zcol + 1));
                ++zcol;
            }
        }
        auto cop = model.copula_flow.build_graph(tape, cols);
        Var ll = tape.add(mg.ld, cop.logdet);
        return tape.affine(tape.mean_all(ll), -1.0, 0.0);
    };

    std::function<void(int)> on_epoch;
    if (cfg.resample_dequant_per_epoch) {
        bool any_discrete = false;
        for (const auto& h : model.handlers) any_discrete |= h.discrete;
        if (any_discrete)
            on_epoch = [&](int epoch) {
                rebuild_splits(Rng::derive_seed(cfg.seed, "dequantise-epoch-" + std::to_string(epoch)));
            };
    }

    model.diagnostics = train_early_stop(params, cfg, build, on_epoch);

    // bake the frozen margin
    if (variant == MarginVariant::ParametricGaussian) {
        model.gaussian.intercept = mp.intercept.value.v[0];
        model.gaussian.t_coef = mp.t_coef.value.v[0];
        model.gaussian.log_sigma = mp.log_sigma.value.v[0];
        model.gaussian.w_coef.assign(mp.w_coef.value.v.begin(), mp.w_coef.value.v.end());
        model.gaussian.tw_coef.assign(mp.tw_coef.value.v.begin(), mp.tw_coef.value.v.end());
    } else {
        model.nsf.whiten_mean = mp.whiten_mean;
        model.nsf.whiten_sd = mp.whiten_sd;
        model.nsf.ate_shift = variant == MarginVariant::NsfAteShift ? mp.ate_shift.value.v[0] : 0.0;
        model.nsf.layers.clear();
        for (auto& p : mp.spline_raw)
            model.nsf.layers.push_back(bij::RqsSpline::from_raw(p.value.v, cfg.knots, 1.0));
    }
    return model;
}

}  // namespace

FrugalFlowModel fit_frugal_flow(const Dataset& data, MarginVariant variant, const TrainConfig& cfg) {
    return fit_impl(data, variant, {}, cfg);
}

FrugalFlowModel fit_heterogeneous_frugal_flow(const Dataset& data, const std::vector<int>& w_cols,
                                              const TrainConfig& cfg) {
    if (w_cols.empty())
        throw ValidationError("fit_heterogeneous_frugal_flow: W is empty; use fit_frugal_flow");
    return fit_impl(data, MarginVariant::ParametricGaussian, w_cols, cfg);
}

}  // namespace ff::frugal
