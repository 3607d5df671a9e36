#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ff/data.hpp"

namespace ff::est {

struct AteEstimate {
    double point = 0.0;
    double stderr_ = 0.0;
    std::string method;
    int64_t n = 0;
};

// mean(Y|T=1) - mean(Y|T=0) with the pooled-variance standard error
AteEstimate difference_of_means(const Dataset& ds);

// OLS of Y on (1, T, Z); reports the T coefficient with homoskedastic stderr.
// With adjust_covariates = false the design is (1, T) and the coefficient
// coincides exactly with the difference of means.
AteEstimate outcome_regression_ate(const Dataset& ds, bool adjust_covariates = true);

struct LogisticFit {
    double intercept = 0.0;
    double slope = 0.0;  // coefficient on T
    double intercept_se = 0.0;
    double slope_se = 0.0;
    int iterations = 0;
};

// Marginal logistic model of binary Y on T, weighted by inverse propensity
// (1/p for treated, 1/(1-p) for control), solved by damped Newton with robust
// sandwich standard errors. Pass known propensities or leave empty to
// estimate them by plain logistic regression of T on Z.
LogisticFit ipw_logistic(const Dataset& ds, std::span<const double> propensity = {});

// Conditional logistic regression of Y on (1, T, Z); returns the fit for the
// (intercept, T) pair, covariate coefficients discarded.
LogisticFit logistic_outcome_regression(const Dataset& ds);

// Plain logistic regression of T on (1, Z) -> fitted probabilities.
std::vector<double> estimate_propensity_logistic(const Dataset& ds);

}  // namespace ff::est
