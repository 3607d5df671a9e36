#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ff/data.hpp"
#include "ff/stats.hpp"

namespace ff::dgp {

// Ground-truth generating process: covariates with known margins, a Gaussian
// copula over (V_Z, V_Y|do(T)) given as a Spearman matrix, a linear Gaussian
// causal margin, and a sigmoid treatment model.
struct DgpSpec {
    struct Margin {
        enum class Kind { Gamma, Bernoulli } kind = Kind::Gamma;
        // Gamma uses the mean/dispersion convention: shape 1/phi, scale mu*phi.
        double mu = 1.0, phi = 1.0;
        double p = 0.5;
    };
    std::vector<Margin> z_margins;
    stats::SymMatrix spearman;  // (D+1)x(D+1); last row/column indexes V_Y
    double ate = 1.0;
    double intercept = 1.0;
    double sigma = 1.0;
    double prop_intercept = 0.0;
    std::vector<double> prop_coefs;                                  // one per covariate
    std::vector<std::tuple<int, int, double>> prop_interactions;     // (i, j, coefficient) on z_i z_j

    void validate() const;
    int dim() const { return static_cast<int>(z_margins.size()); }
    double propensity(std::span<const double> z) const;

    static DgpSpec m1(double ate = 1.0);
    static DgpSpec m2(double ate = 1.0);
    static DgpSpec m3(double ate = 1.0);
    static DgpSpec by_name(const std::string& name, double ate = 1.0);
};

struct DgpSample {
    Dataset data;
    double true_ate = 0.0;
    std::vector<double> v_y;  // the causal-margin ranks actually used
};

DgpSample simulate_dgp(const DgpSpec& spec, int64_t n, uint64_t seed);

// Exact log p(z, y | t) under the spec; treatment-assignment factor excluded.
// Discrete covariates integrate the copula over their rank interval with
// tensorised Gauss-Legendre quadrature, supported for up to two discrete
// columns.
double log_density_zy_given_t(const DgpSpec& spec, std::span<const double> z, double y, double t);

double log_propensity(const DgpSpec& spec, std::span<const double> z, double t);

// 2 sin(pi rs / 6), the Gaussian-copula conversion.
double spearman_to_pearson(double rs);

// Entrywise conversion with positive-definiteness repair by eigenvalue
// clipping at 1e-6.
stats::SymMatrix pearson_from_spearman(const stats::SymMatrix& spearman);

}  // namespace ff::dgp
