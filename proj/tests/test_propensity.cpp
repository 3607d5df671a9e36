#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/dgp.hpp"
#include "ff/propensity.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

using namespace ff;
using prop::PropensityFlowModel;
using prop::PropensityOverride;

namespace {

TrainConfig prop_cfg(uint64_t seed) {
    TrainConfig cfg;
    cfg.knots = 8;
    cfg.flow_layers = 2;
    cfg.hidden_width = 24;
    cfg.hidden_depth = 1;
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 300;
    cfg.patience = 60;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("independent treatment: implied propensity equals the marginal rate") {
    Rng rng(3);
    const int n = 6000;
    Tensor z(n, 2);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        z(i, 1) = rng.gamma(1.0, 1.0);
        t[static_cast<size_t>(i)] = rng.bernoulli(0.37) ? 1.0 : 0.0;
    }
    auto model = PropensityFlowModel::fit(t, z, prop_cfg(3), 3);
    double rate = stats::mean(t);
    // grid of z values
    Tensor grid(25, 2);
    Rng grng(5);
    for (int i = 0; i < 25; ++i) {
        grid(i, 0) = grng.normal();
        grid(i, 1) = grng.gamma(1.0, 1.0);
    }
    auto ps = model.implied_propensity(grid);
    for (double p : ps) CHECK(std::fabs(p - rate) < 0.03);
}

TEST_CASE("m1 propensity is recovered within tolerance") {
    auto sample = dgp::simulate_dgp(dgp::DgpSpec::m1(1.0), 12000, 7);
    auto cfg = prop_cfg(7);
    cfg.flow_layers = 3;
    cfg.hidden_width = 32;
    cfg.max_epochs = 400;
    auto model = PropensityFlowModel::fit(sample.data.t, sample.data.z, cfg, 7);

    // truth on a held-out batch
    auto held = dgp::simulate_dgp(dgp::DgpSpec::m1(1.0), 3000, 8);
    auto ps = model.implied_propensity(held.data.z);
    dgp::DgpSpec spec = dgp::DgpSpec::m1(1.0);
    double mae = 0.0;
    std::vector<double> zrow(4);
    for (int i = 0; i < 3000; ++i) {
        for (int j = 0; j < 4; ++j) zrow[static_cast<size_t>(j)] = held.data.z(i, j);
        mae += std::fabs(ps[static_cast<size_t>(i)] - spec.propensity(zrow));
    }
    mae /= 3000;
    MESSAGE("m1 propensity MAE: ", mae);
    CHECK(mae < 0.05);

    // calibration: among held-out rows with phat in [0.4, 0.6], the observed
    // treatment rate stays in [0.35, 0.65]
    auto ps_held = model.implied_propensity(held.data.z);
    double hits = 0, total = 0;
    for (int i = 0; i < 3000; ++i) {
        double p = ps_held[static_cast<size_t>(i)];
        if (p >= 0.4 && p <= 0.6) {
            total += 1;
            hits += held.data.t[static_cast<size_t>(i)];
        }
    }
    REQUIRE(total > 50);
    double rate = hits / total;
    CHECK(rate > 0.35);
    CHECK(rate < 0.65);
}

TEST_CASE("rank bijectivity per fixed z") {
    auto sample = dgp::simulate_dgp(dgp::DgpSpec::m1(1.0), 2000, 9);
    auto model = PropensityFlowModel::fit(sample.data.t, sample.data.z, prop_cfg(9), 9);
    Rng rng(10);
    Tensor z(200, 4);
    std::vector<double> v(200);
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 4; ++j) z(i, j) = sample.data.z(i, j);
        v[static_cast<size_t>(i)] = rng.uniform(0.01, 0.99);
    }
    auto u = model.rank_to_base(v, z);
    auto back = model.base_to_rank(u, z);
    for (int i = 0; i < 200; ++i) CHECK(std::fabs(back[static_cast<size_t>(i)] - v[static_cast<size_t>(i)]) < 1e-6);
    // positivity on the training support
    auto ps = model.implied_propensity(sample.data.z);
    for (double p : ps) {
        CHECK(p > 1e-4);
        CHECK(p < 1.0 - 1e-4);
    }
}

TEST_CASE("sampling preserves the marginal treated fraction") {
    auto sample = dgp::simulate_dgp(dgp::DgpSpec::m1(1.0), 8000, 11);
    auto model = PropensityFlowModel::fit(sample.data.t, sample.data.z, prop_cfg(11), 11);
    Rng rng(12);
    std::vector<double> u(8000);
    for (double& x : u) x = rng.uniform();
    auto t = model.sample_treatment(sample.data.z, u);
    double got = stats::mean(t);
    double want = stats::mean(sample.data.t);
    CHECK(std::fabs(got - want) < 0.02);
}

TEST_CASE("learnt model recovers propensity coefficient signs") {
    auto sample = dgp::simulate_dgp(dgp::DgpSpec::m1(1.0), 12000, 13);
    auto cfg = prop_cfg(13);
    cfg.flow_layers = 3;
    cfg.hidden_width = 32;
    auto model = PropensityFlowModel::fit(sample.data.t, sample.data.z, cfg, 13);
    Rng rng(14);
    std::vector<double> u(12000);
    for (double& x : u) x = rng.uniform();
    auto t = model.sample_treatment(sample.data.z, u);

    Dataset ds;
    ds.schema = sample.data.schema;
    ds.z = sample.data.z;
    ds.t = t;
    ds.y = sample.data.y;
    auto corr_sign = [&](int j) {
        std::vector<double> zc = ds.z_col(j);
        return stats::pearson(zc, t);
    };
    CHECK(corr_sign(0) > 0.0);
    CHECK(corr_sign(1) > 0.0);
    CHECK(corr_sign(2) < 0.05);  // small negative coefficient, weak signal
    CHECK(corr_sign(3) > 0.0);
}

TEST_CASE("overrides: constant rate, monotone coupling, validation") {
    Rng rng(15);
    Tensor z(1000, 2);
    for (double& x : z.v) x = rng.normal();

    PropensityOverride c;
    c.kind = PropensityOverride::Kind::Constant;
    c.constant = 0.5;
    CHECK_NOTHROW(c.validate(z, 1));
    int treated = 0;
    const int n = 100000;
    Rng urng(16);
    for (int i = 0; i < n; ++i) treated += urng.uniform() > 1.0 - 0.5 ? 1 : 0;
    CHECK(std::fabs(static_cast<double>(treated) / n - 0.5) < 0.005);

    // u held fixed, p increased -> T non-decreasing
    for (double u : {0.1, 0.45, 0.8}) {
        int prev = 0;
        for (double p = 0.05; p < 1.0; p += 0.05) {
            int t = u > 1.0 - p ? 1 : 0;
            CHECK(t >= prev);
            prev = t;
        }
    }

    PropensityOverride bad;
    bad.kind = PropensityOverride::Kind::LogisticLinear;
    bad.coefs = {50.0, 50.0};  // saturates to exactly 1 in double precision
    CHECK_THROWS_AS(bad.validate(z, 1), ValidationError);
}

TEST_CASE("single-arm data is rejected") {
    Tensor z(100, 1);
    std::vector<double> t(100, 1.0);
    CHECK_THROWS_AS(PropensityFlowModel::fit(t, z, prop_cfg(1), 1), ValidationError);
}
