#include "ff/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"
#include "ff/stats.hpp"

namespace ff::est {

namespace {

// Solve A x = b for symmetric positive definite A via Cholesky.
std::vector<double> spd_solve(const stats::SymMatrix& a, std::span<const double> b) {
    stats::SymMatrix l = stats::cholesky(a);
    const int n = a.n;
    std::vector<double> y(static_cast<size_t>(n)), x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l.at(i, k) * y[static_cast<size_t>(k)];
        y[static_cast<size_t>(i)] = s / l.at(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[static_cast<size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * x[static_cast<size_t>(k)];
        x[static_cast<size_t>(i)] = s / l.at(i, i);
    }
    return x;
}

stats::SymMatrix spd_inverse(const stats::SymMatrix& a) {
    const int n = a.n;
    stats::SymMatrix inv(n);
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        e[static_cast<size_t>(j)] = 1.0;
        auto col = spd_solve(a, e);
        for (int i = 0; i < n; ++i) inv.at(i, j) = col[static_cast<size_t>(i)];
        e[static_cast<size_t>(j)] = 0.0;
    }
    return inv;
}

// Weighted logistic regression by damped Newton; X rows are the design.
struct WeightedLogistic {
    std::vector<double> beta;
    stats::SymMatrix info_inv;      // model-based covariance
    stats::SymMatrix sandwich_cov;  // robust covariance
    int iterations = 0;
};

WeightedLogistic fit_weighted_logistic(const Tensor& x, std::span<const double> y,
                                       std::span<const double> w) {
    const int n = x.rows, p = x.cols;
    std::vector<double> beta(static_cast<size_t>(p), 0.0);
    auto neg_ll = [&](const std::vector<double>& b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double eta = 0.0;
            for (int j = 0; j < p; ++j) eta += x(i, j) * b[static_cast<size_t>(j)];
            // -w [y eta - log(1+e^eta)]
            double lse = eta > 30.0 ? eta : std::log1p(std::exp(eta));
            s -= w[static_cast<size_t>(i)] * (y[static_cast<size_t>(i)] * eta - lse);
        }
        return s;
    };

    double f = neg_ll(beta);
    int it = 0;
    for (; it < 100; ++it) {
        std::vector<double> grad(static_cast<size_t>(p), 0.0);
        stats::SymMatrix info(p);
        double max_eta = 0.0;
        for (int i = 0; i < n; ++i) {
            double eta = 0.0;
            for (int j = 0; j < p; ++j) eta += x(i, j) * beta[static_cast<size_t>(j)];
            max_eta = std::max(max_eta, std::fabs(eta));
            double mu = stats::expit(eta);
            double r = w[static_cast<size_t>(i)] * (y[static_cast<size_t>(i)] - mu);
            double v = w[static_cast<size_t>(i)] * mu * (1.0 - mu);
            for (int j = 0; j < p; ++j) {
                grad[static_cast<size_t>(j)] += r * x(i, j);
                for (int k = 0; k <= j; ++k) info.at(j, k) += v * x(i, j) * x(i, k);
            }
        }
        if (max_eta > 30.0)
            throw TrainingError("ipw_logistic: separation detected (|linear predictor| > 30)");
        for (int j = 0; j < p; ++j)
            for (int k = j + 1; k < p; ++k) info.at(j, k) = info.at(k, j);

        double gnorm = 0.0;
        for (double g : grad) gnorm = std::max(gnorm, std::fabs(g));
        if (gnorm < 1e-13 * n) break;

        std::vector<double> step;
        try {
            step = spd_solve(info, grad);
        } catch (const NumericError&) {
            throw TrainingError("ipw_logistic: singular information matrix");
        }
        // halve the step until the objective does not increase
        double damp = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            std::vector<double> cand = beta;
            for (int j = 0; j < p; ++j) cand[static_cast<size_t>(j)] += damp * step[static_cast<size_t>(j)];
            double fc = neg_ll(cand);
            if (fc <= f) {
                beta = std::move(cand);
                f = fc;
                moved = true;
                break;
            }
            damp *= 0.5;
        }
        if (!moved) break;
    }
    if (it >= 100) throw TrainingError("ipw_logistic: no convergence in 100 iterations");

    // final information and robust meat
    stats::SymMatrix info(p), meat(p);
    for (int i = 0; i < n; ++i) {
        double eta = 0.0;
        for (int j = 0; j < p; ++j) eta += x(i, j) * beta[static_cast<size_t>(j)];
        double mu = stats::expit(eta);
        double v = w[static_cast<size_t>(i)] * mu * (1.0 - mu);
        double s = w[static_cast<size_t>(i)] * (y[static_cast<size_t>(i)] - mu);
        for (int j = 0; j < p; ++j)
            for (int k = 0; k <= j; ++k) {
                info.at(j, k) += v * x(i, j) * x(i, k);
                meat.at(j, k) += s * s * x(i, j) * x(i, k);
            }
    }
    for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) {
            info.at(j, k) = info.at(k, j);
            meat.at(j, k) = meat.at(k, j);
        }

    WeightedLogistic out;
    out.beta = beta;
    out.iterations = it;
    out.info_inv = spd_inverse(info);
    out.sandwich_cov = stats::SymMatrix(p);
    // bread * meat * bread
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
            double s = 0.0;
            for (int c = 0; c < p; ++c)
                for (int d = 0; d < p; ++d) s += out.info_inv.at(a, c) * meat.at(c, d) * out.info_inv.at(d, b);
            out.sandwich_cov.at(a, b) = s;
        }
    return out;
}

}  // namespace

AteEstimate difference_of_means(const Dataset& ds) {
    ds.validate();
    std::vector<double> y0, y1;
    for (size_t i = 0; i < ds.t.size(); ++i) (ds.t[i] == 1.0 ? y1 : y0).push_back(ds.y[i]);
    if (y0.empty() || y1.empty()) throw ValidationError("difference_of_means: one treatment arm is empty");
    const double n0 = static_cast<double>(y0.size()), n1 = static_cast<double>(y1.size());
    double m0 = stats::mean(y0), m1 = stats::mean(y1);
    double sp2 = ((n1 - 1.0) * stats::variance(y1) + (n0 - 1.0) * stats::variance(y0)) / (n0 + n1 - 2.0);
    AteEstimate e;
    e.point = m1 - m0;
    e.stderr_ = std::sqrt(sp2 * (1.0 / n1 + 1.0 / n0));
    e.method = "dom";
    e.n = ds.rows();
    return e;
}

AteEstimate outcome_regression_ate(const Dataset& ds, bool adjust_covariates) {
    ds.validate();
    const int n = static_cast<int>(ds.rows());
    const int p = adjust_covariates ? 2 + ds.z.cols : 2;
    Tensor x(n, p);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = ds.t[static_cast<size_t>(i)];
        if (adjust_covariates)
            for (int j = 0; j < ds.z.cols; ++j) x(i, 2 + j) = ds.z(i, j);
    }
    stats::SymMatrix xtx(p);
    std::vector<double> xty(static_cast<size_t>(p), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            xty[static_cast<size_t>(j)] += x(i, j) * ds.y[static_cast<size_t>(i)];
            for (int k = 0; k <= j; ++k) xtx.at(j, k) += x(i, j) * x(i, k);
        }
    for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) xtx.at(j, k) = xtx.at(k, j);

    std::vector<double> beta;
    stats::SymMatrix xtx_inv(p);
    try {
        beta = spd_solve(xtx, xty);
        xtx_inv = spd_inverse(xtx);
    } catch (const NumericError&) {
        throw ValidationError("outcome_regression_ate: singular design matrix");
    }
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        double fit = 0.0;
        for (int j = 0; j < p; ++j) fit += x(i, j) * beta[static_cast<size_t>(j)];
        double r = ds.y[static_cast<size_t>(i)] - fit;
        rss += r * r;
    }
    if (n <= p) throw ValidationError("outcome_regression_ate: not enough rows for the design");
    const double sigma2 = rss / static_cast<double>(n - p);
    AteEstimate e;
    e.point = beta[1];
    e.stderr_ = std::sqrt(sigma2 * xtx_inv.at(1, 1));
    e.method = "or";
    e.n = n;
    return e;
}

std::vector<double> estimate_propensity_logistic(const Dataset& ds) {
    const int n = static_cast<int>(ds.rows());
    const int p = 1 + ds.z.cols;
    Tensor x(n, p);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (int j = 0; j < ds.z.cols; ++j) x(i, 1 + j) = ds.z(i, j);
    }
    std::vector<double> ones(static_cast<size_t>(n), 1.0);
    auto fit = fit_weighted_logistic(x, ds.t, ones);
    std::vector<double> ps(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double eta = 0.0;
        for (int j = 0; j < p; ++j) eta += x(i, j) * fit.beta[static_cast<size_t>(j)];
        ps[static_cast<size_t>(i)] = std::clamp(stats::expit(eta), 1e-6, 1.0 - 1e-6);
    }
    return ps;
}

LogisticFit ipw_logistic(const Dataset& ds, std::span<const double> propensity) {
    ds.validate();
    for (double yi : ds.y)
        if (yi != 0.0 && yi != 1.0) throw ValidationError("ipw_logistic: outcome must be binary");
    std::vector<double> ps;
    if (propensity.empty()) {
        ps = estimate_propensity_logistic(ds);
        propensity = ps;
    }
    if (propensity.size() != ds.t.size()) throw DimensionError("ipw_logistic: propensity length mismatch");
    const int n = static_cast<int>(ds.rows());
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double p = propensity[static_cast<size_t>(i)];
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("ipw_logistic: propensity outside (0,1)");
        w[static_cast<size_t>(i)] = ds.t[static_cast<size_t>(i)] == 1.0 ? 1.0 / p : 1.0 / (1.0 - p);
    }
    Tensor x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = ds.t[static_cast<size_t>(i)];
    }
    auto fit = fit_weighted_logistic(x, ds.y, w);
    LogisticFit out;
    out.intercept = fit.beta[0];
    out.slope = fit.beta[1];
    out.intercept_se = std::sqrt(fit.sandwich_cov.at(0, 0));
    out.slope_se = std::sqrt(fit.sandwich_cov.at(1, 1));
    out.iterations = fit.iterations;
    return out;
}

LogisticFit logistic_outcome_regression(const Dataset& ds) {
    ds.validate();
    for (double yi : ds.y)
        if (yi != 0.0 && yi != 1.0)
            throw ValidationError("logistic_outcome_regression: outcome must be binary");
    const int n = static_cast<int>(ds.rows());
    const int p = 2 + ds.z.cols;
    Tensor x(n, p);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = ds.t[static_cast<size_t>(i)];
        for (int j = 0; j < ds.z.cols; ++j) x(i, 2 + j) = ds.z(i, j);
    }
    std::vector<double> ones(static_cast<size_t>(n), 1.0);
    auto fit = fit_weighted_logistic(x, ds.y, ones);
    LogisticFit out;
    out.intercept = fit.beta[0];
    out.slope = fit.beta[1];
    out.intercept_se = std::sqrt(fit.info_inv.at(0, 0));
    out.slope_se = std::sqrt(fit.info_inv.at(1, 1));
    out.iterations = fit.iterations;
    return out;
}

}  // namespace ff::est
