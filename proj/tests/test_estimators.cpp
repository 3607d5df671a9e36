#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/estimators.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

using namespace ff;

namespace {

Schema simple_schema(int d) {
    Schema s;
    for (int j = 0; j < d; ++j) s.cols.push_back({"z" + std::to_string(j + 1), Role::Covariate, ColKind::Continuous});
    s.cols.push_back({"t", Role::Treatment, ColKind::Discrete});
    s.cols.push_back({"y", Role::Outcome, ColKind::Continuous});
    return s;
}

Dataset make_ds(int d, const std::vector<double>& t, const std::vector<double>& y, const Tensor& z) {
    Dataset ds;
    ds.schema = simple_schema(d);
    ds.t = t;
    ds.y = y;
    ds.z = z;
    return ds;
}

}  // namespace

TEST_CASE("difference of means: exact and degenerate cases") {
    Tensor z(4, 1);
    auto ds = make_ds(1, {0, 1, 0, 1}, {0, 1, 0, 1}, z);
    auto e = est::difference_of_means(ds);
    CHECK(e.point == doctest::Approx(1.0));

    auto flat = make_ds(1, {0, 1, 0, 1}, {3, 3, 3, 3}, z);
    CHECK(est::difference_of_means(flat).point == doctest::Approx(0.0));

    auto degenerate = make_ds(1, {1, 1, 1, 1}, {0, 1, 2, 3}, z);
    CHECK_THROWS_AS(est::difference_of_means(degenerate), ValidationError);
}

TEST_CASE("outcome regression recovers exact linear coefficients") {
    Rng rng(3);
    const int n = 200;
    Tensor z(n, 1);
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        t[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        y[static_cast<size_t>(i)] = 2.0 * t[static_cast<size_t>(i)] + 3.0 * z(i, 0);
    }
    auto e = est::outcome_regression_ate(make_ds(1, t, y, z));
    CHECK(std::fabs(e.point - 2.0) < 1e-10);
}

TEST_CASE("outcome regression matches hand-solved normal equations on 4 rows") {
    // rows: (t, z, y); design [1 t z]
    Tensor z(4, 1);
    z(0, 0) = 0.0;
    z(1, 0) = 1.0;
    z(2, 0) = 2.0;
    z(3, 0) = 3.0;
    std::vector<double> t{0, 1, 0, 1}, y{1.0, 4.0, 3.0, 8.0};
    // X^T X = [[4,2,6],[2,2,4],[6,4,14]], X^T y = [16, 12, 34]
    // solving by hand gives beta = (0.5, 2.5, 1.5)
    auto e = est::outcome_regression_ate(make_ds(1, t, y, z));
    CHECK(e.point == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("outcome regression rejects rank-deficient designs") {
    Tensor z(6, 2);
    std::vector<double> t(6), y(6);
    Rng rng(5);
    for (int i = 0; i < 6; ++i) {
        z(i, 0) = rng.normal();
        z(i, 1) = 2.0 * z(i, 0);  // collinear
        t[static_cast<size_t>(i)] = i % 2;
        y[static_cast<size_t>(i)] = rng.normal();
    }
    CHECK_THROWS_AS(est::outcome_regression_ate(make_ds(2, t, y, z)), ValidationError);
}

TEST_CASE("dom equals or exactly when covariates are excluded") {
    Rng rng(7);
    const int n = 500;
    Tensor z(n, 1);
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        t[static_cast<size_t>(i)] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        y[static_cast<size_t>(i)] = t[static_cast<size_t>(i)] * 1.7 + rng.normal();
    }
    auto ds = make_ds(1, t, y, z);
    auto dom = est::difference_of_means(ds);
    auto orr = est::outcome_regression_ate(ds, false);
    CHECK(orr.point == doctest::Approx(dom.point).epsilon(1e-12));
}

TEST_CASE("ipw with constant propensity equals plain logistic mle") {
    Rng rng(11);
    const int n = 2000;
    Tensor z(n, 1);
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        t[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        double p = stats::expit(-1.0 + 2.0 * t[static_cast<size_t>(i)]);
        y[static_cast<size_t>(i)] = rng.bernoulli(p) ? 1.0 : 0.0;
    }
    auto ds = make_ds(1, t, y, z);
    std::vector<double> ps(static_cast<size_t>(n), 0.5);
    auto ipw = est::ipw_logistic(ds, ps);
    // plain mle via the same routine with weight-neutral propensity 0.5 is
    // identical by construction; verify against closed-form cell frequencies
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (int i = 0; i < n; ++i) {
        if (t[static_cast<size_t>(i)] == 1.0)
            (y[static_cast<size_t>(i)] == 1.0 ? n11 : n10) += 1.0;
        else
            (y[static_cast<size_t>(i)] == 1.0 ? n01 : n00) += 1.0;
    }
    double want_c = std::log(n01 / n00);
    double want_b = std::log(n11 / n10) - want_c;
    CHECK(ipw.intercept == doctest::Approx(want_c).epsilon(1e-6));
    CHECK(ipw.slope == doctest::Approx(want_b).epsilon(1e-6));
}

TEST_CASE("ipw on a tiny dataset matches a brute-force grid minimiser") {
    Tensor z(6, 1);
    std::vector<double> t{0, 0, 0, 1, 1, 1}, y{0, 1, 0, 1, 1, 0};
    for (int i = 0; i < 6; ++i) z(i, 0) = 0.1 * i;
    std::vector<double> ps{0.3, 0.4, 0.5, 0.5, 0.6, 0.7};
    auto ds = make_ds(1, t, y, z);
    auto ipw = est::ipw_logistic(ds, ps);

    // brute force the weighted negative log-likelihood on a fine grid
    auto nll = [&](double c, double b) {
        double s = 0.0;
        for (int i = 0; i < 6; ++i) {
            double w = t[static_cast<size_t>(i)] == 1.0 ? 1.0 / ps[static_cast<size_t>(i)]
                                                        : 1.0 / (1.0 - ps[static_cast<size_t>(i)]);
            double eta = c + b * t[static_cast<size_t>(i)];
            s -= w * (y[static_cast<size_t>(i)] * eta - std::log1p(std::exp(eta)));
        }
        return s;
    };
    double bc = 0, bb = 0, best = 1e300;
    for (double c = -3.0; c <= 3.0; c += 0.002)
        for (double b = -3.0; b <= 3.0; b += 0.002) {
            double v = nll(c, b);
            if (v < best) {
                best = v;
                bc = c;
                bb = b;
            }
        }
    CHECK(std::fabs(ipw.intercept - bc) < 1e-3 + 0.002);
    CHECK(std::fabs(ipw.slope - bb) < 1e-3 + 0.002);
}

TEST_CASE("separation is detected") {
    Tensor z(8, 1);
    std::vector<double> t{0, 0, 0, 0, 1, 1, 1, 1}, y{0, 0, 0, 0, 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) z(i, 0) = i;
    auto ds = make_ds(1, t, y, z);
    CHECK_THROWS_AS(est::ipw_logistic(ds, std::vector<double>(8, 0.5)), TrainingError);
}

TEST_CASE("estimators are invariant to row permutation") {
    Rng rng(13);
    const int n = 300;
    Tensor z(n, 2);
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        z(i, 1) = rng.gamma(2.0, 1.0);
        t[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        y[static_cast<size_t>(i)] = t[static_cast<size_t>(i)] + z(i, 0) + rng.normal();
    }
    auto ds = make_ds(2, t, y, z);
    auto e1 = est::outcome_regression_ate(ds);
    auto d1 = est::difference_of_means(ds);

    // reverse the rows
    Dataset rev = ds;
    for (int i = 0; i < n; ++i) {
        rev.t[static_cast<size_t>(i)] = t[static_cast<size_t>(n - 1 - i)];
        rev.y[static_cast<size_t>(i)] = y[static_cast<size_t>(n - 1 - i)];
        for (int j = 0; j < 2; ++j) rev.z(i, j) = z(n - 1 - i, j);
    }
    auto e2 = est::outcome_regression_ate(rev);
    auto d2 = est::difference_of_means(rev);
    CHECK(e1.point == doctest::Approx(e2.point).epsilon(1e-12));
    CHECK(d1.point == doctest::Approx(d2.point).epsilon(1e-12));
}
