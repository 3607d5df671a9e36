#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ff/data.hpp"
#include "ff/frugal.hpp"
#include "ff/propensity.hpp"

namespace ff::gen {

struct MarginSpec {
    enum class Kind { Gaussian, Logistic, Probit, LearnedNsf } kind = Kind::Gaussian;
    double ate = 0.0;        // Gaussian / LearnedNsf location shift on T
    double intercept = 0.0;  // Gaussian
    double sigma = 1.0;      // Gaussian
    double beta = 0.0;       // Logistic / Probit coefficient on T
    double c = 0.0;          // Logistic / Probit intercept

    static Kind kind_from_string(const std::string& s);
    static std::string to_string(Kind k);
};

struct PropensitySpec {
    enum class Kind { Learned, Override, Randomized } kind = Kind::Learned;
    double randomized_p = 0.5;
    prop::PropensityOverride override_fn;
};

// Conditional Gaussian margin for heterogeneous generation:
// Y | W, do(T) ~ N(base + ate*t + w_lin.w + (w_int.w)*t, sigma).
struct HeteroMarginSpec {
    double base = 0.0;
    double ate = 0.0;
    double sigma = 1.0;
    std::vector<double> w_lin;
    std::vector<double> w_int;
};

struct BenchmarkSpec {
    int64_t n = 0;
    uint64_t seed = 0;
    double rho = 0.0;  // unobserved-confounding correlation
    MarginSpec margin;
    PropensitySpec propensity;
    std::optional<HeteroMarginSpec> heterogeneity;

    void validate() const;
};

// Sample from the bivariate Gaussian copula with correlation rho; margins
// uniform. Substream "copula-pair" of the seed.
std::pair<std::vector<double>, std::vector<double>> gaussian_copula_pair(double rho, int64_t n, uint64_t seed);

struct BenchmarkResult {
    Dataset data;
    std::vector<double> v_y;  // causal-margin ranks used for Y
    std::vector<double> u_t;  // propensity-side ranks used for T
};

// Six-step pipeline: confounded rank pair, independent covariate uniforms,
// copula push to correlated covariate ranks, covariates via marginal
// inverses, treatments via the propensity inverse, outcomes via the chosen
// causal margin. Named substreams make the (Z,T) block invariant to the
// margin spec and the (Z, V_Y) block invariant to the propensity spec at
// rho = 0.
BenchmarkResult generate_benchmark(const frugal::FrugalFlowModel& ff, const prop::PropensityFlowModel& pf,
                                   const BenchmarkSpec& spec);

// Outcome transform of step 6 in isolation.
std::vector<double> outcome_from_margin(std::span<const double> v, std::span<const double> t,
                                        const MarginSpec& margin,
                                        const frugal::FrugalFlowModel* ff = nullptr);

// Location-family margins pin the generation-time ATE to the requested value
// by construction; E[Y|do(t)] shifts by ate * t while the shared base
// integral cancels. Discrete margins expose their exact marginal parameters
// instead of a mean difference.
double analytic_ate(const MarginSpec& margin);

struct SweepRow {
    double rho = 0.0;
    double mean_dom = 0.0;
    double mean_abs_bias = 0.0;
    int replicates = 0;
};

// |DoM - tau| per rho, averaged over replicate datasets.
std::vector<SweepRow> confounding_sweep(const frugal::FrugalFlowModel& ff,
                                        const prop::PropensityFlowModel& pf, const BenchmarkSpec& base,
                                        std::span<const double> rho_list, int replicates);

}  // namespace ff::gen
