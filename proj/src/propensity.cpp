#include "ff/propensity.hpp"

#include <algorithm>
#include <cmath>

#include "ff/bijectors.hpp"
#include "ff/errors.hpp"
#include "ff/rng.hpp"
#include "ff/spline_graph.hpp"
#include "ff/stats.hpp"

namespace ff::prop {

using diff::Tape;
using diff::Var;

double PropensityOverride::operator()(std::span<const double> z) const {
    switch (kind) {
        case Kind::Constant: return constant;
        case Kind::LogisticLinear: {
            if (z.size() != coefs.size()) throw DimensionError("PropensityOverride: coefficient count mismatch");
            double lin = intercept;
            for (size_t j = 0; j < coefs.size(); ++j) lin += coefs[j] * z[j];
            return stats::expit(lin);
        }
    }
    throw ValidationError("PropensityOverride: unknown kind");
}

void PropensityOverride::validate(const Tensor& z, uint64_t seed, int n_checks) const {
    if (z.rows == 0) throw ValidationError("PropensityOverride::validate: no covariate rows");
    Rng rng = Rng::substream(seed, "override-validate");
    std::vector<double> row(static_cast<size_t>(z.cols));
    for (int c = 0; c < n_checks; ++c) {
        int i = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(z.rows));
        for (int j = 0; j < z.cols; ++j) row[static_cast<size_t>(j)] = z(i, j);
        double p = (*this)(row);
        if (!(p > 0.0 && p < 1.0))
            throw ValidationError("PropensityOverride: probability " + std::to_string(p) +
                                  " outside (0,1) violates positivity");
    }
}

Tensor PropensityFlowModel::standardise(const Tensor& z) const {
    Tensor out = z;
    for (int i = 0; i < z.rows; ++i)
        for (int j = 0; j < z.cols; ++j)
            out(i, j) = (z(i, j) - z_mean_[static_cast<size_t>(j)]) / z_sd_[static_cast<size_t>(j)];
    return out;
}

PropensityFlowModel PropensityFlowModel::fit(std::span<const double> t, const Tensor& z,
                                             const TrainConfig& cfg, uint64_t seed) {
    if (static_cast<int>(t.size()) != z.rows) throw DimensionError("fit_propensity_flow: t/z row mismatch");
    int ones = 0;
    for (double ti : t) {
        if (ti != 0.0 && ti != 1.0) throw ValidationError("fit_propensity_flow: treatment must be binary");
        ones += ti == 1.0;
    }
    if (ones == 0 || ones == static_cast<int>(t.size()))
        throw ValidationError("fit_propensity_flow: both treatment arms must be present");

    PropensityFlowModel m;
    m.t_cdf_ = marg::StepCdf::from_samples(t);
    m.knots_ = cfg.knots;
    m.z_mean_.resize(static_cast<size_t>(z.cols));
    m.z_sd_.resize(static_cast<size_t>(z.cols));
    for (int j = 0; j < z.cols; ++j) {
        std::vector<double> col(static_cast<size_t>(z.rows));
        for (int i = 0; i < z.rows; ++i) col[static_cast<size_t>(i)] = z(i, j);
        m.z_mean_[static_cast<size_t>(j)] = stats::mean(col);
        double sd = std::sqrt(stats::variance(col));
        m.z_sd_[static_cast<size_t>(j)] = sd > 0.0 ? sd : 1.0;
    }

    Rng init = Rng::substream(seed, "propensity-init");
    const int pu = 3 * cfg.knots - 1;
    for (int l = 0; l < cfg.flow_layers; ++l) {
        m.layers_.emplace_back(std::vector<int>{}, z.cols, std::vector<int>(static_cast<size_t>(pu), 1),
                               cfg.hidden_width, cfg.hidden_depth);
        m.layers_.back().init(init, true);
    }

    // dequantised treatment ranks, one draw per training run
    std::vector<double> v =
        marg::distributional_transform(t, m.t_cdf_, Rng::derive_seed(seed, "propensity-dequantise"));

    // stratified split by T
    std::vector<int> idx0, idx1;
    for (size_t i = 0; i < t.size(); ++i) (t[i] == 1.0 ? idx1 : idx0).push_back(static_cast<int>(i));
    Rng split_rng = Rng::substream(seed, "propensity-split");
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

    auto gather = [&](const std::vector<int>& rows) {
        Tensor vt(static_cast<int>(rows.size()), 1);
        Tensor zt(static_cast<int>(rows.size()), z.cols);
        for (size_t i = 0; i < rows.size(); ++i) {
            vt(static_cast<int>(i), 0) = v[static_cast<size_t>(rows[i])];
            for (int j = 0; j < z.cols; ++j) zt(static_cast<int>(i), j) = z(rows[i], j);
        }
        return std::pair<Tensor, Tensor>{vt, m.standardise(zt)};
    };
    auto [train_v, train_z] = gather(train_idx);
    auto [val_v, val_z] = gather(val_idx);

    std::vector<ParamTensor*> params;
    for (auto& mlp : m.layers_) {
        auto ps = mlp.parameters();
        params.insert(params.end(), ps.begin(), ps.end());
    }

    const diff::SplineGraphConfig sg{cfg.knots, 1.0, m.min_bin_, m.min_deriv_};
    auto build = [&](Tape& tape, bool train_split) {
        const Tensor& vd = train_split ? train_v : val_v;
        const Tensor& zd = train_split ? train_z : val_z;
        Var ctx = tape.constant(zd);
        Var h = tape.affine(tape.constant(vd), 2.0, -1.0);
        Var ld = tape.constant(Tensor(vd.rows, 1, 0.0));
        for (auto& mlp : m.layers_) {
            Var raw = mlp.forward(tape, Var{}, ctx);
            auto knots = diff::build_spline_knots(tape, raw, sg);
            auto ap = diff::rqs_apply_graph(tape, h, knots, sg);
            h = ap.y;
            ld = tape.add(ld, ap.logdet);
        }
        return tape.affine(tape.mean_all(ld), -1.0, 0.0);
    };

    m.diag_ = train_early_stop(params, cfg, build);
    return m;
}

std::vector<double> PropensityFlowModel::rank_to_base(std::span<const double> v, const Tensor& z) const {
    if (static_cast<int>(v.size()) != z.rows) throw DimensionError("rank_to_base: v/z row mismatch");
    Tensor zs = standardise(z);
    const int n = z.rows;
    const int pu = 3 * knots_ - 1;
    std::vector<double> h(v.begin(), v.end());
    for (double& x : h) x = 2.0 * x - 1.0;
    Tensor empty(n, 0);
    for (const auto& mlp : layers_) {
        Tensor raw = mlp.forward_frozen(empty, &zs);
        for (int i = 0; i < n; ++i) {
            std::span<const double> row(&raw.v[static_cast<size_t>(i) * static_cast<size_t>(pu)],
                                        static_cast<size_t>(pu));
            auto spline = bij::RqsSpline::from_raw(row, knots_, 1.0, min_bin_, min_deriv_);
            h[static_cast<size_t>(i)] = bij::rqs_forward(spline, h[static_cast<size_t>(i)]).y;
        }
    }
    for (double& x : h) x = 0.5 * x + 0.5;
    return h;
}

std::vector<double> PropensityFlowModel::base_to_rank(std::span<const double> u, const Tensor& z) const {
    if (static_cast<int>(u.size()) != z.rows) throw DimensionError("base_to_rank: u/z row mismatch");
    Tensor zs = standardise(z);
    const int n = z.rows;
    const int pu = 3 * knots_ - 1;
    std::vector<double> h(u.begin(), u.end());
    for (double& x : h) x = 2.0 * x - 1.0;
    Tensor empty(n, 0);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        Tensor raw = it->forward_frozen(empty, &zs);
        for (int i = 0; i < n; ++i) {
            std::span<const double> row(&raw.v[static_cast<size_t>(i) * static_cast<size_t>(pu)],
                                        static_cast<size_t>(pu));
            auto spline = bij::RqsSpline::from_raw(row, knots_, 1.0, min_bin_, min_deriv_);
            h[static_cast<size_t>(i)] = bij::rqs_inverse(spline, h[static_cast<size_t>(i)]).y;
        }
    }
    for (double& x : h) x = 0.5 * x + 0.5;
    return h;
}

std::vector<double> PropensityFlowModel::implied_propensity(const Tensor& z) const {
    const double cut = t_cdf_.f_at(t_cdf_.index_of(0.0));
    std::vector<double> v(static_cast<size_t>(z.rows), cut);
    std::vector<double> img = rank_to_base(v, z);
    for (double& p : img) p = std::clamp(1.0 - p, 1e-12, 1.0 - 1e-12);
    return img;
}

std::vector<double> PropensityFlowModel::sample_treatment(const Tensor& z, std::span<const double> u) const {
    std::vector<double> ranks = base_to_rank(u, z);
    return marg::inverse_distributional_transform(ranks, t_cdf_);
}

}  // namespace ff::prop
