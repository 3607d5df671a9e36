#include "ff/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"
#include "ff/estimators.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

namespace ff::gen {

MarginSpec::Kind MarginSpec::kind_from_string(const std::string& s) {
    if (s == "gaussian") return Kind::Gaussian;
    if (s == "logistic") return Kind::Logistic;
    if (s == "probit") return Kind::Probit;
    if (s == "learned-nsf") return Kind::LearnedNsf;
    throw ValidationError("unknown margin kind '" + s + "'");
}

std::string MarginSpec::to_string(Kind k) {
    switch (k) {
        case Kind::Gaussian: return "gaussian";
        case Kind::Logistic: return "logistic";
        case Kind::Probit: return "probit";
        case Kind::LearnedNsf: return "learned-nsf";
    }
    return "?";
}

void BenchmarkSpec::validate() const {
    if (n < 1) throw ValidationError("BenchmarkSpec: n must be >= 1");
    if (!(std::fabs(rho) < 1.0)) throw ValidationError("BenchmarkSpec: |rho| must be < 1");
    if (margin.kind == MarginSpec::Kind::Gaussian && margin.sigma <= 0.0)
        throw ValidationError("BenchmarkSpec: gaussian margin needs sigma > 0");
    if (propensity.kind == PropensitySpec::Kind::Randomized &&
        !(propensity.randomized_p > 0.0 && propensity.randomized_p < 1.0))
        throw ValidationError("BenchmarkSpec: randomized propensity needs p in (0,1)");
    if (heterogeneity && margin.kind != MarginSpec::Kind::Gaussian)
        throw ValidationError("BenchmarkSpec: heterogeneous generation uses the gaussian margin family");
    if (heterogeneity && heterogeneity->sigma <= 0.0)
        throw ValidationError("BenchmarkSpec: heterogeneous margin needs sigma > 0");
}

std::pair<std::vector<double>, std::vector<double>> gaussian_copula_pair(double rho, int64_t n,
                                                                         uint64_t seed) {
    if (!(std::fabs(rho) < 1.0)) throw ValidationError("gaussian_copula_pair: |rho| must be < 1");
    Rng rng = Rng::substream(seed, "copula-pair");
    std::vector<double> u1(static_cast<size_t>(n)), u2(static_cast<size_t>(n));
    const double s = std::sqrt(1.0 - rho * rho);
    for (int64_t i = 0; i < n; ++i) {
        double g1 = rng.normal();
        double g2 = rng.normal();
        u1[static_cast<size_t>(i)] = std::clamp(stats::normal_cdf(g1), 1e-15, 1.0 - 1e-15);
        u2[static_cast<size_t>(i)] =
            std::clamp(stats::normal_cdf(rho * g1 + s * g2), 1e-15, 1.0 - 1e-15);
    }
    return {std::move(u1), std::move(u2)};
}

std::vector<double> outcome_from_margin(std::span<const double> v, std::span<const double> t,
                                        const MarginSpec& margin, const frugal::FrugalFlowModel* ff) {
    if (v.size() != t.size()) throw DimensionError("outcome_from_margin: v/t size mismatch");
    std::vector<double> y(v.size());
    switch (margin.kind) {
        case MarginSpec::Kind::Gaussian:
            if (margin.sigma <= 0.0) throw ValidationError("outcome_from_margin: sigma must be positive");
            for (size_t i = 0; i < v.size(); ++i)
                y[i] = margin.intercept + margin.ate * t[i] + margin.sigma * stats::normal_quantile(v[i]);
            break;
        case MarginSpec::Kind::Logistic:
            for (size_t i = 0; i < v.size(); ++i)
                y[i] = v[i] < stats::expit(margin.beta * t[i] + margin.c) ? 1.0 : 0.0;
            break;
        case MarginSpec::Kind::Probit:
            for (size_t i = 0; i < v.size(); ++i)
                y[i] = v[i] < stats::normal_cdf(margin.beta * t[i] + margin.c) ? 1.0 : 0.0;
            break;
        case MarginSpec::Kind::LearnedNsf:
            if (!ff) throw ValidationError("outcome_from_margin: learned-nsf margin needs a fitted model");
            for (size_t i = 0; i < v.size(); ++i)
                y[i] = ff->margin_inverse_t0(v[i]) + margin.ate * t[i];
            break;
    }
    return y;
}

double analytic_ate(const MarginSpec& margin) {
    switch (margin.kind) {
        case MarginSpec::Kind::Gaussian:
        case MarginSpec::Kind::LearnedNsf:
            // location family: E[Y|do(1)] - E[Y|do(0)] = ate exactly, the
            // shared quantile integral cancels
            return margin.ate;
        case MarginSpec::Kind::Logistic:
        case MarginSpec::Kind::Probit:
            throw ValidationError(
                "analytic_ate: discrete margins parameterise (c, beta) rather than a mean difference");
    }
    throw ValidationError("analytic_ate: unknown margin kind");
}

BenchmarkResult generate_benchmark(const frugal::FrugalFlowModel& ff, const prop::PropensityFlowModel& pf,
                                   const BenchmarkSpec& spec) {
    spec.validate();
    const int d = static_cast<int>(ff.handlers.size());
    if (spec.heterogeneity && !ff.heterogeneous())
        throw ValidationError("generate_benchmark: heterogeneous spec requires a heterogeneous fit");
    if (!spec.heterogeneity && ff.heterogeneous())
        throw ValidationError("generate_benchmark: heterogeneous model requires spec.heterogeneity");
    if (spec.heterogeneity &&
        (spec.heterogeneity->w_lin.size() != ff.w_cols.size() ||
         spec.heterogeneity->w_int.size() != ff.w_cols.size()))
        throw ValidationError("generate_benchmark: heterogeneity coefficients must match the fitted W set");

    const int64_t n = spec.n;

    // step 1: confounding-linked rank pair
    auto [u_t, v_y] = gaussian_copula_pair(spec.rho, n, spec.seed);

    // step 2: independent covariate uniforms
    Rng uz_rng = Rng::substream(spec.seed, "covariate-uniforms");
    Tensor u_rest(static_cast<int>(n), d);
    for (double& x : u_rest.v) x = uz_rng.uniform();

    // step 3: push (V_Y, U_Z) through the copula flow
    const int margin_pos = ff.heterogeneous() ? static_cast<int>(ff.w_cols.size()) : 0;
    Tensor u_full(static_cast<int>(n), d + 1);
    for (int i = 0; i < static_cast<int>(n); ++i) {
        int zc = 0;
        for (int pos = 0; pos < d + 1; ++pos) {
            if (pos == margin_pos)
                u_full(i, pos) = v_y[static_cast<size_t>(i)];
            else
                u_full(i, pos) = u_rest(i, zc++);
        }
    }
    Tensor v_full = ff.copula_flow.sample(u_full);

    // map copula positions back to covariate column order
    std::vector<int> col_of_pos;
    {
        std::vector<int> order;
        if (ff.heterogeneous()) {
            for (int j : ff.w_cols) order.push_back(j);
            for (int j = 0; j < d; ++j)
                if (std::find(ff.w_cols.begin(), ff.w_cols.end(), j) == ff.w_cols.end()) order.push_back(j);
        } else {
            for (int j = 0; j < d; ++j) order.push_back(j);
        }
        col_of_pos = order;
    }
    Tensor v_z(static_cast<int>(n), d);
    {
        int zc = 0;
        for (int pos = 0; pos < d + 1; ++pos) {
            if (pos == margin_pos) continue;
            for (int i = 0; i < static_cast<int>(n); ++i)
                v_z(i, col_of_pos[static_cast<size_t>(zc)]) = v_full(i, pos);
            ++zc;
        }
    }

    // step 4: covariates via marginal inverses
    Tensor z = ff.covariates_from_ranks(v_z);

    // step 5: treatments by pushing U_{T|Z} through the propensity inverse
    std::vector<double> t(static_cast<size_t>(n));
    switch (spec.propensity.kind) {
        case PropensitySpec::Kind::Learned: {
            t = pf.sample_treatment(z, u_t);
            break;
        }
        case PropensitySpec::Kind::Randomized: {
            const double cut = 1.0 - spec.propensity.randomized_p;
            for (int64_t i = 0; i < n; ++i) t[static_cast<size_t>(i)] = u_t[static_cast<size_t>(i)] > cut ? 1.0 : 0.0;
            break;
        }
        case PropensitySpec::Kind::Override: {
            spec.propensity.override_fn.validate(z, spec.seed);
            std::vector<double> row(static_cast<size_t>(d));
            for (int64_t i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) row[static_cast<size_t>(j)] = z(static_cast<int>(i), j);
                const double p = spec.propensity.override_fn(row);
                t[static_cast<size_t>(i)] = u_t[static_cast<size_t>(i)] > 1.0 - p ? 1.0 : 0.0;
            }
            break;
        }
    }

    // step 6: outcomes through the chosen causal margin
    std::vector<double> y;
    if (spec.heterogeneity) {
        const auto& h = *spec.heterogeneity;
        y.resize(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            double mu = h.base + h.ate * t[static_cast<size_t>(i)];
            for (size_t j = 0; j < ff.w_cols.size(); ++j) {
                double wv = z(static_cast<int>(i), ff.w_cols[j]);
                mu += h.w_lin[j] * wv + h.w_int[j] * wv * t[static_cast<size_t>(i)];
            }
            y[static_cast<size_t>(i)] =
                mu + h.sigma * stats::normal_quantile(v_y[static_cast<size_t>(i)]);
        }
    } else {
        y = outcome_from_margin(v_y, t, spec.margin, &ff);
    }

    BenchmarkResult out;
    out.v_y = std::move(v_y);
    out.u_t = std::move(u_t);
    out.data.schema = ff.schema;
    // the generated outcome may be discrete even when the fitted one was not
    if (spec.margin.kind == MarginSpec::Kind::Logistic || spec.margin.kind == MarginSpec::Kind::Probit) {
        for (auto& c : out.data.schema.cols)
            if (c.role == Role::Outcome) c.kind = ColKind::Discrete;
    }
    out.data.z = std::move(z);
    out.data.t = std::move(t);
    out.data.y = std::move(y);
    return out;
}

std::vector<SweepRow> confounding_sweep(const frugal::FrugalFlowModel& ff,
                                        const prop::PropensityFlowModel& pf, const BenchmarkSpec& base,
                                        std::span<const double> rho_list, int replicates) {
    if (replicates < 1) throw ValidationError("confounding_sweep: replicates must be >= 1");
    for (size_t i = 1; i < rho_list.size(); ++i)
        if (rho_list[i] < rho_list[i - 1]) throw ValidationError("confounding_sweep: rho_list must be sorted");
    const double tau = analytic_ate(base.margin);
    std::vector<SweepRow> rows;
    for (double rho : rho_list) {
        SweepRow row;
        row.rho = rho;
        row.replicates = replicates;
        for (int r = 0; r < replicates; ++r) {
            BenchmarkSpec spec = base;
            spec.rho = rho;
            spec.seed = Rng::derive_seed(base.seed, "sweep-" + std::to_string(rho) + "-" + std::to_string(r));
            auto res = generate_benchmark(ff, pf, spec);
            auto dom = est::difference_of_means(res.data);
            row.mean_dom += dom.point;
            row.mean_abs_bias += std::fabs(dom.point - tau);
        }
        row.mean_dom /= replicates;
        row.mean_abs_bias /= replicates;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ff::gen
