#pragma once

#include <span>
#include <vector>

namespace ff::stats {

inline constexpr double pi = 3.14159265358979323846;

double normal_pdf(double x);
double normal_cdf(double x);
// Inverse standard normal CDF, |error| < 1e-13 after Halley refinement.
double normal_quantile(double p);

double expit(double x);
double logit(double p);

// Regularized lower incomplete gamma P(a, x) and its inverse in x.
double gamma_p(double a, double x);
double gamma_p_inv(double a, double p);

double gamma_pdf(double x, double shape, double scale);
double gamma_quantile(double p, double shape, double scale);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased

// Kolmogorov-Smirnov statistic of a sample against Uniform(0,1).
double ks_uniform_statistic(std::vector<double> xs);
// Asymptotic KS p-value for statistic d at sample size n.
double ks_pvalue(double d, int n);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
// Mid-ranks scaled to (0,1): rank/(n+1) with ties averaged.
std::vector<double> uniform_ranks(std::span<const double> xs);

// Dense symmetric linear algebra, sized for correlation matrices (D <= ~20).
struct SymMatrix {
    int n = 0;
    std::vector<double> a;  // row-major n x n
    SymMatrix() = default;
    explicit SymMatrix(int d) : n(d), a(static_cast<size_t>(d) * d, 0.0) {}
    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

// Cholesky factor L (lower) with A = L L^T; throws NumericError if not PD.
SymMatrix cholesky(const SymMatrix& a);
// Cyclic Jacobi eigendecomposition; returns eigenvalues and fills vectors column-wise.
std::vector<double> jacobi_eigen(const SymMatrix& a, SymMatrix& vectors);
// Clip eigenvalues below floor_ev and rescale to unit diagonal.
SymMatrix nearest_pd_correlation(const SymMatrix& a, double floor_ev = 1e-6);

// Log-density of the Gaussian copula with Pearson correlation matrix R at ranks u.
double gaussian_copula_logpdf(const SymMatrix& pearson, std::span<const double> u);

// Same density with the Cholesky factor cached for repeated evaluation.
class GaussianCopulaDensity {
public:
    explicit GaussianCopulaDensity(const SymMatrix& pearson);
    double logpdf(std::span<const double> u) const;
    double logpdf_scores(std::span<const double> q) const;  // q = Phi^-1(u)

private:
    SymMatrix chol_;
    double half_logdet_ = 0.0;
};

// Exact Gaussian-copula conversion between Spearman and Pearson correlation.
double spearman_to_pearson(double rs);

}  // namespace ff::stats
