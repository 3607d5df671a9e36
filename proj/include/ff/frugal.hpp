#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ff/bijectors.hpp"
#include "ff/copula.hpp"
#include "ff/data.hpp"
#include "ff/marginal.hpp"
#include "ff/train.hpp"

namespace ff::frugal {

enum class MarginVariant { ParametricGaussian, NsfAteShift, NsfUnconditional };

std::string to_string(MarginVariant v);
MarginVariant margin_variant_from_string(const std::string& s);

// Variant (i): Gaussian outcome CDF with a location term on T, optionally
// extended with linear and interaction terms on a covariate subset W for
// heterogeneous effects.
struct GaussianMarginParams {
    double intercept = 0.0;
    double t_coef = 0.0;
    double log_sigma = 0.0;
    std::vector<double> w_coef;
    std::vector<double> tw_coef;
};

// Variants (ii)/(iii): spline flow onto (0,1); variant (ii) first removes a
// learned location shift on T in outcome space.
struct NsfMarginParams {
    double whiten_mean = 0.0;
    double whiten_sd = 1.0;
    double ate_shift = 0.0;
    std::vector<bij::RqsSpline> layers;

    bij::Chain chain() const;  // the shiftless part
};

// Per-covariate rank handler.
struct ColumnHandler {
    bool discrete = false;
    marg::UnivariateFlow flow;
    marg::StepCdf cdf;
};

class FrugalFlowModel {
public:
    MarginVariant variant = MarginVariant::ParametricGaussian;
    GaussianMarginParams gaussian;
    NsfMarginParams nsf;
    copula::CopulaFlow copula_flow;
    std::vector<ColumnHandler> handlers;  // one per covariate column
    Schema schema;
    std::vector<int> w_cols;  // heterogeneous covariate subset; empty = plain
    TrainConfig train_config;
    FitDiagnostics diagnostics;

    bool heterogeneous() const { return !w_cols.empty(); }

    // The learnt marginal causal effect. Variant (iii) does not carry one and
    // heterogeneous fits expose conditional_ate instead.
    double estimated_ate() const;
    double conditional_ate(std::span<const double> w) const;

    double margin_rank_one(double y, double t, std::span<const double> w = {}) const;
    double margin_log_density_one(double y, double t, std::span<const double> w = {}) const;
    double margin_inverse(double v, double t, std::span<const double> w = {}) const;
    double margin_inverse_t0(double v) const;  // control-arm quantile function

    std::vector<double> causal_margin_ranks(std::span<const double> y, std::span<const double> t) const;

    // Covariate ranks from raw values; discrete columns draw dequantisation
    // noise from the given seed.
    Tensor covariate_ranks(const Tensor& z, uint64_t seed) const;
    Tensor covariates_from_ranks(const Tensor& v) const;

    struct LogLik {
        double margin = 0.0;  // mean log p(y | do(t)) per row
        double copula = 0.0;  // mean log c(v_Z | v1) per row
        double total = 0.0;
    };
    // Mean log-likelihood of the (y, v_Z | t) factor over the batch.
    LogLik log_likelihood(std::span<const double> y, std::span<const double> t, const Tensor& v_z) const;

    // Full log p(z, y | t) for one row, covariate margins included. Discrete
    // covariates use the dequantised plug-in rank, so this is exact only for
    // fully continuous schemas.
    double joint_log_density_row(std::span<const double> z, double y, double t, uint64_t seed = 0) const;
};

// Joint maximum-likelihood fit of the causal margin and the conditional
// copula. Covariate marginal flows are fitted first, then held fixed.
FrugalFlowModel fit_frugal_flow(const Dataset& data, MarginVariant variant, const TrainConfig& cfg);

// Heterogeneous variant: the causal margin conditions on (W, T) and the
// copula orders covariates as (W block, margin rank, remaining block).
FrugalFlowModel fit_heterogeneous_frugal_flow(const Dataset& data, const std::vector<int>& w_cols,
                                              const TrainConfig& cfg);

}  // namespace ff::frugal
