#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/rng.hpp"
#include "ff/stats.hpp"

using namespace ff;
using namespace ff::stats;

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-8, 1e-4, 0.025, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-6}) {
        double x = normal_quantile(p);
        CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gamma_p and its inverse agree") {
    for (double a : {0.5, 1.0, 2.3, 7.0}) {
        for (double p : {0.01, 0.2, 0.5, 0.9, 0.999}) {
            double x = gamma_p_inv(a, p);
            CHECK(gamma_p(a, x) == doctest::Approx(p).epsilon(1e-8));
        }
    }
    // shape 1 is the unit exponential
    CHECK(gamma_quantile(0.5, 1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("ks statistic: hand-checked small case") {
    // sorted sample {0.1, 0.3, 0.9}: D = max deviation from i/n envelope
    std::vector<double> xs{0.9, 0.1, 0.3};
    double d = ks_uniform_statistic(xs);
    CHECK(d == doctest::Approx(0.3666666667));
    CHECK(ks_pvalue(0.01, 10000) > 0.1);
    CHECK(ks_pvalue(0.5, 1000) < 1e-6);
}

TEST_CASE("ks of true uniforms is small") {
    Rng rng(8);
    std::vector<double> xs(20000);
    for (double& x : xs) x = rng.uniform();
    CHECK(ks_uniform_statistic(xs) < 0.015);
}

TEST_CASE("pearson and spearman on exact relationships") {
    std::vector<double> x(100), ylin(100), ymono(100);
    for (int i = 0; i < 100; ++i) {
        x[static_cast<size_t>(i)] = i;
        ylin[static_cast<size_t>(i)] = 2.0 * i + 1.0;
        ymono[static_cast<size_t>(i)] = std::exp(0.05 * i);
    }
    CHECK(pearson(x, ylin) == doctest::Approx(1.0));
    CHECK(spearman(x, ymono) == doctest::Approx(1.0));
}

TEST_CASE("spearman-to-pearson conversion") {
    CHECK(spearman_to_pearson(0.0) == 0.0);
    CHECK(spearman_to_pearson(1.0) == doctest::Approx(1.0));
    CHECK(spearman_to_pearson(0.5) == doctest::Approx(2.0 * std::sin(stats::pi / 12.0)));
    CHECK(spearman_to_pearson(0.5) == doctest::Approx(0.51764).epsilon(1e-4));
    CHECK_THROWS(spearman_to_pearson(1.5));
}

TEST_CASE("cholesky reproduces the matrix and rejects non-PD input") {
    SymMatrix a(3);
    double vals[3][3] = {{4, 2, 0.6}, {2, 3, 0.4}, {0.6, 0.4, 2}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a.at(i, j) = vals[i][j];
    SymMatrix l = cholesky(a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += l.at(i, k) * l.at(j, k);
            CHECK(s == doctest::Approx(a.at(i, j)));
        }
    SymMatrix bad(2);
    bad.at(0, 0) = 1;
    bad.at(1, 1) = 1;
    bad.at(0, 1) = bad.at(1, 0) = 1.2;
    CHECK_THROWS(cholesky(bad));
}

TEST_CASE("eigenvalue clipping repairs an indefinite correlation matrix") {
    SymMatrix bad(3);
    for (int i = 0; i < 3; ++i) bad.at(i, i) = 1.0;
    bad.at(0, 1) = bad.at(1, 0) = 0.9;
    bad.at(0, 2) = bad.at(2, 0) = 0.9;
    bad.at(1, 2) = bad.at(2, 1) = -0.9;
    SymMatrix fixed = nearest_pd_correlation(bad);
    CHECK_NOTHROW(cholesky(fixed));
    for (int i = 0; i < 3; ++i) CHECK(fixed.at(i, i) == doctest::Approx(1.0));
}

TEST_CASE("gaussian copula log-density: independence and bivariate closed form") {
    SymMatrix eye(2);
    eye.at(0, 0) = eye.at(1, 1) = 1.0;
    std::vector<double> u{0.3, 0.8};
    CHECK(gaussian_copula_logpdf(eye, u) == doctest::Approx(0.0).epsilon(1e-12));

    SymMatrix r(2);
    r.at(0, 0) = r.at(1, 1) = 1.0;
    r.at(0, 1) = r.at(1, 0) = 0.8;
    double q1 = normal_quantile(0.3), q2 = normal_quantile(0.8);
    double rho = 0.8;
    double want = -0.5 * std::log(1 - rho * rho) -
                  (rho * rho * (q1 * q1 + q2 * q2) - 2 * rho * q1 * q2) / (2 * (1 - rho * rho));
    CHECK(gaussian_copula_logpdf(r, u) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("gamma sampling matches its quantile function") {
    Rng rng(77);
    std::vector<double> xs(30000);
    for (double& x : xs) x = rng.gamma(1.0, 1.0);
    // probability integral transform via gamma_p should be uniform
    std::vector<double> u(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) u[i] = gamma_p(1.0, xs[i]);
    CHECK(ks_uniform_statistic(u) < 0.02);
}
