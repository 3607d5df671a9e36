#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/marginal.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

using namespace ff;
using namespace ff::marg;

namespace {

TrainConfig small_cfg() {
    TrainConfig cfg;
    cfg.knots = 8;
    cfg.flow_layers = 3;
    cfg.max_epochs = 250;
    cfg.patience = 40;
    cfg.learning_rate = 1e-2;
    return cfg;
}

}  // namespace

TEST_CASE("marginal flow on gaussian data yields uniform ranks") {
    Rng rng(101);
    std::vector<double> xs(5000);
    for (double& x : xs) x = rng.normal();
    auto flow = UnivariateFlow::fit(xs, small_cfg(), 101);
    auto ranks = flow.to_ranks(xs);
    CHECK(stats::ks_uniform_statistic(ranks) < 0.03);
    // median of symmetric data sits near rank one half
    CHECK(flow.to_rank(0.0) == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("marginal flow on gamma(1,1) data yields uniform ranks") {
    Rng rng(102);
    std::vector<double> xs(5000);
    for (double& x : xs) x = rng.gamma(1.0, 1.0);
    auto flow = UnivariateFlow::fit(xs, small_cfg(), 102);
    auto ranks = flow.to_ranks(xs);
    CHECK(stats::ks_uniform_statistic(ranks) < 0.03);
}

TEST_CASE("held-out log-likelihood within 5 percent of training") {
    Rng rng(103);
    std::vector<double> train(4000), test(4000);
    for (double& x : train) x = rng.normal();
    for (double& x : test) x = rng.normal();
    auto flow = UnivariateFlow::fit(train, small_cfg(), 103);
    auto mean_ll = [&](const std::vector<double>& xs) {
        double s = 0;
        for (double x : xs) s += flow.log_density(x);
        return s / static_cast<double>(xs.size());
    };
    double lt = mean_ll(train), lh = mean_ll(test);
    CHECK(std::fabs(lh - lt) / std::fabs(lt) < 0.05);
}

TEST_CASE("shift equivariance of learned ranks") {
    Rng rng(104);
    std::vector<double> xs(3000), shifted(3000);
    for (size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.gamma(2.0, 1.0);
        shifted[i] = xs[i] + 7.5;
    }
    auto f0 = UnivariateFlow::fit(xs, small_cfg(), 104);
    auto f1 = UnivariateFlow::fit(shifted, small_cfg(), 104);
    double max_dev = 0.0;
    for (size_t i = 0; i < xs.size(); i += 25)
        max_dev = std::max(max_dev, std::fabs(f0.to_rank(xs[i]) - f1.to_rank(shifted[i])));
    CHECK(max_dev < 0.05);
}

TEST_CASE("to_ranks is monotone and round-trips through from_ranks") {
    Rng rng(105);
    std::vector<double> xs(2000);
    for (double& x : xs) x = rng.normal() * 2.0 + 1.0;
    auto flow = UnivariateFlow::fit(xs, small_cfg(), 105);
    double prev = -1.0;
    for (double x = -4.0; x <= 6.0; x += 0.1) {
        double r = flow.to_rank(x);
        CHECK(r > 0.0);
        CHECK(r < 1.0);
        CHECK(r > prev);
        prev = r;
    }
    for (double x : {-2.0, 0.1, 1.0, 3.3}) {
        CHECK(std::fabs(flow.from_rank(flow.to_rank(x)) - x) < 1e-5);
    }
}

TEST_CASE("degenerate constant column is rejected") {
    std::vector<double> xs(200, 3.0);
    CHECK_THROWS_AS(UnivariateFlow::fit(xs, small_cfg(), 1), ValidationError);
    std::vector<double> tiny(10, 1.0);
    CHECK_THROWS_AS(UnivariateFlow::fit(tiny, small_cfg(), 1), ValidationError);
}

TEST_CASE("distributional transform: bernoulli hand cases") {
    std::vector<double> sample{0, 0, 1, 1};
    StepCdf cdf = StepCdf::from_samples(sample);
    CHECK(cdf.transform_one(0.0, 0.4) == doctest::Approx(0.2));
    CHECK(cdf.transform_one(1.0, 0.5) == doctest::Approx(0.75));
    CHECK(cdf.inverse_one(0.2) == 0.0);
    CHECK(cdf.inverse_one(0.75) == 1.0);
    CHECK_THROWS_AS(cdf.transform_one(2.0, 0.5), ValidationError);
}

TEST_CASE("distributional transform of bernoulli(0.3) is uniform") {
    Rng rng(106);
    std::vector<double> xs(10000);
    for (double& x : xs) x = rng.bernoulli(0.3) ? 1.0 : 0.0;
    StepCdf cdf = StepCdf::from_samples(xs);
    auto u = distributional_transform(xs, cdf, uint64_t{42});
    double d = stats::ks_uniform_statistic(u);
    CHECK(stats::ks_pvalue(d, static_cast<int>(u.size())) > 0.01);
}

TEST_CASE("inverse distributional transform recovers discrete values exactly") {
    Rng rng(107);
    std::vector<double> xs(5000);
    for (double& x : xs) {
        double r = rng.uniform();
        x = r < 0.2 ? -1.0 : (r < 0.7 ? 0.0 : 2.5);
    }
    StepCdf cdf = StepCdf::from_samples(xs);
    auto u = distributional_transform(xs, cdf, uint64_t{9});
    auto back = inverse_distributional_transform(u, cdf);
    for (size_t i = 0; i < xs.size(); ++i) CHECK(back[i] == xs[i]);
}
