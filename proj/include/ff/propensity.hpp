#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ff/made.hpp"
#include "ff/marginal.hpp"
#include "ff/tensor.hpp"
#include "ff/train.hpp"

namespace ff::prop {

// Named built-in propensity overrides; arbitrary user code stays out of the
// config surface.
struct PropensityOverride {
    enum class Kind { Constant, LogisticLinear };
    Kind kind = Kind::Constant;
    double constant = 0.5;
    double intercept = 0.0;
    std::vector<double> coefs;  // one per covariate column

    double operator()(std::span<const double> z) const;
    // Samples rows from z and checks every output lies strictly inside (0,1).
    void validate(const Tensor& z, uint64_t seed, int n_checks = 1000) const;
};

// Conditional copula of the dequantised treatment rank on Z: a univariate
// spline flow on (0,1) whose knots come from an unmasked conditioner over the
// standardised covariates.
class PropensityFlowModel {
public:
    static PropensityFlowModel fit(std::span<const double> t, const Tensor& z, const TrainConfig& cfg,
                                   uint64_t seed);

    // Training direction v -> u per row, strictly monotone for fixed z.
    std::vector<double> rank_to_base(std::span<const double> v, const Tensor& z) const;
    // Generation direction u -> v.
    std::vector<double> base_to_rank(std::span<const double> u, const Tensor& z) const;

    // p(T=1|z) = 1 - image of the dequantisation cut F(0) under the flow.
    std::vector<double> implied_propensity(const Tensor& z) const;

    // T = inverse empirical CDF of the flow-inverted rank.
    std::vector<double> sample_treatment(const Tensor& z, std::span<const double> u) const;

    const marg::StepCdf& treatment_cdf() const { return t_cdf_; }
    const FitDiagnostics& diagnostics() const { return diag_; }

    // serialization access
    marg::StepCdf t_cdf_;
    std::vector<diff::MaskedMlp> layers_;
    std::vector<double> z_mean_, z_sd_;
    int knots_ = 8;
    double min_bin_ = 1e-3, min_deriv_ = 1e-3;
    FitDiagnostics diag_;

private:
    Tensor standardise(const Tensor& z) const;
};

}  // namespace ff::prop
