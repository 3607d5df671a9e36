#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/bijectors.hpp"
#include "ff/rng.hpp"
#include "ff/adam.hpp"
#include "ff/spline_graph.hpp"
#include "ff/stats.hpp"
#include "ff/tape.hpp"
#include "testutil.hpp"

using namespace ff;
using namespace ff::bij;

namespace {

RqsSpline random_spline(Rng& rng, int bins) {
    std::vector<double> raw(static_cast<size_t>(3 * bins - 1));
    for (double& r : raw) r = rng.normal();
    return RqsSpline::from_raw(raw, bins, 1.0);
}

}  // namespace

TEST_CASE("identity spline maps x to x with zero logdet") {
    RqsSpline s = RqsSpline::identity(8, 1.0);
    for (double x : {-0.99, -0.5, 0.0, 0.3, 0.875, 0.999}) {
        auto r = rqs_forward(s, x);
        CHECK(r.y == doctest::Approx(x).epsilon(1e-14));
        CHECK(r.logdet == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("identity tails outside the interval") {
    Rng rng(3);
    RqsSpline s = random_spline(rng, 6);
    auto r = rqs_forward(s, 2.0);  // bound + 1
    CHECK(r.y == 2.0);
    CHECK(r.logdet == 0.0);
    auto ri = rqs_inverse(s, -3.5);
    CHECK(ri.y == -3.5);
    CHECK(ri.logdet == 0.0);
}

TEST_CASE("random splines: logdet matches finite differences and round-trips") {
    Rng rng(17);
    for (int rep = 0; rep < 25; ++rep) {
        RqsSpline s = random_spline(rng, 4 + rep % 6);
        double x = rng.uniform(-0.98, 0.98);
        auto r = rqs_forward(s, x);
        const double h = 1e-6;
        double fd = (rqs_forward(s, x + h).y - rqs_forward(s, x - h).y) / (2 * h);
        CHECK(fftest::rel_err(std::exp(r.logdet), fd) < 1e-4);
        auto back = rqs_inverse(s, r.y);
        CHECK(std::fabs(back.y - x) < 1e-8);
        CHECK(back.logdet == doctest::Approx(-r.logdet).epsilon(1e-9));
    }
}

TEST_CASE("spline monotonicity on sorted inputs") {
    Rng rng(23);
    RqsSpline s = random_spline(rng, 8);
    double prev = rqs_forward(s, -0.999).y;
    for (double x = -0.99; x < 1.0; x += 0.01) {
        double y = rqs_forward(s, x).y;
        CHECK(y > prev);
        prev = y;
    }
}

TEST_CASE("invalid splines are rejected at construction") {
    RqsSpline s = RqsSpline::identity(4, 1.0);
    s.derivs[2] = -0.1;
    CHECK_THROWS_AS(rqs_bijector(s), ValidationError);
    RqsSpline s2 = RqsSpline::identity(4, 1.0);
    s2.x_knots[2] = s2.x_knots[1];
    CHECK_THROWS_AS(rqs_bijector(s2), ValidationError);
}

TEST_CASE("tanh bijector basics") {
    Univariate b = tanh_bijector();
    auto r = forward(b, 0.0);
    CHECK(r.y == 0.0);
    CHECK(r.logdet == doctest::Approx(0.0));
    auto inv = inverse(b, forward(b, 1.3).y);
    CHECK(inv.y == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("affine bijector: value, logdet, zero-scale rejection") {
    Univariate b = affine_bijector(2.0, 1.0);
    auto r = forward(b, 3.0);
    CHECK(r.y == 7.0);
    CHECK(r.logdet == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(affine_bijector(0.0, 1.0), ValidationError);
}

TEST_CASE("permutation round-trip and bijection check") {
    Permutation p({2, 0, 1});
    std::vector<double> in{1.0, 2.0, 3.0}, mid(3), out(3);
    p.apply(in, mid);
    CHECK(mid[0] == 3.0);
    p.apply_inverse(mid, out);
    for (int i = 0; i < 3; ++i) CHECK(out[static_cast<size_t>(i)] == in[static_cast<size_t>(i)]);
    CHECK_THROWS_AS(Permutation({0, 0, 1}), ValidationError);
}

TEST_CASE("compose: identity pair and inverse-affine pair") {
    Chain c1 = compose({identity_bijector(), identity_bijector()});
    auto r1 = forward(c1, 0.42);
    CHECK(r1.y == 0.42);
    CHECK(r1.logdet == 0.0);

    Chain c2 = compose({affine_bijector(2.0, 0.0), affine_bijector(0.5, 0.0)});
    auto r2 = forward(c2, -1.7);
    CHECK(r2.y == doctest::Approx(-1.7));
    CHECK(r2.logdet == doctest::Approx(0.0));
}

TEST_CASE("compose logdet equals sum of parts") {
    Rng rng(31);
    Chain c = compose({tanh_bijector(), affine_bijector(0.5, 0.5)});
    for (int i = 0; i < 10; ++i) {
        double x = rng.normal();
        auto whole = forward(c, x);
        auto p1 = forward(tanh_bijector(), x);
        auto p2 = forward(affine_bijector(0.5, 0.5), p1.y);
        CHECK(whole.logdet == doctest::Approx(p1.logdet + p2.logdet).epsilon(1e-12));
        CHECK(whole.y == doctest::Approx(p2.y));
    }
}

TEST_CASE("compose rejects incompatible intervals") {
    // tanh lands in (-1,1); a map declared on [0,1] cannot follow it.
    CHECK_THROWS_AS(compose({tanh_bijector(), affine_between({0.0, 1.0}, {-1.0, 1.0})}), ValidationError);
}

TEST_CASE("round-trip and jacobian-consistency invariants over random chains") {
    Rng rng(47);
    for (int rep = 0; rep < 10; ++rep) {
        Chain c = compose({affine_bijector(1.0 / 1.7, -0.2), tanh_bijector(), rqs_bijector(random_spline(rng, 7)),
                           rqs_bijector(random_spline(rng, 5)), affine_between({-1.0, 1.0}, {0.0, 1.0})});
        for (int i = 0; i < 20; ++i) {
            double x = rng.normal() * 2.0;
            auto f = forward(c, x);
            auto b = inverse(c, f.y);
            CHECK(std::fabs(b.y - x) < 1e-6);
            CHECK(std::fabs(f.logdet + b.logdet) < 1e-8);
        }
    }
}

TEST_CASE("pushforward of a standard normal through a chain integrates to one") {
    Rng rng(53);
    Chain c = compose({tanh_bijector(), rqs_bijector(random_spline(rng, 8))});
    // density of y = c(x) with x ~ N(0,1), integrated over a trapezoid grid
    const int n = 20000;
    double lo = -0.999999, hi = 0.999999;
    double acc = 0.0, prev = 0.0;
    for (int i = 0; i <= n; ++i) {
        double y = lo + (hi - lo) * i / n;
        auto inv = inverse(c, y);
        double dens = stats::normal_pdf(inv.y) * std::exp(inv.logdet);
        if (i > 0) acc += 0.5 * (dens + prev) * (hi - lo) / n;
        prev = dens;
    }
    CHECK(std::fabs(acc - 1.0) < 1e-3);
}

TEST_CASE("tape spline path agrees with the frozen scalar path") {
    Rng rng(61);
    const int bins = 6;
    ParamTensor raw("raw", 1, 3 * bins - 1);
    for (double& v : raw.value.v) v = rng.normal();
    RqsSpline frozen = RqsSpline::from_raw(raw.value.v, bins, 1.0);

    const int n = 9;
    Tensor x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(-1.4, 1.4);  // some rows outside the interval

    diff::Tape t;
    diff::SplineGraphConfig cfg{bins, 1.0, 1e-3, 1e-3};
    auto knots = diff::build_spline_knots(t, t.broadcast_rows(t.param(raw), n), cfg);
    auto ap = diff::rqs_apply_graph(t, t.constant(x), knots, cfg);
    for (int i = 0; i < n; ++i) {
        auto want = rqs_forward(frozen, x(i, 0));
        CHECK(t.val(ap.y)(i, 0) == doctest::Approx(want.y).epsilon(1e-12));
        CHECK(t.val(ap.logdet)(i, 0) == doctest::Approx(want.logdet).epsilon(1e-12));
    }
}

TEST_CASE("tape spline gradients match finite differences") {
    Rng rng(67);
    const int bins = 5;
    ParamTensor raw("raw", 1, 3 * bins - 1);
    for (double& v : raw.value.v) v = 0.5 * rng.normal();
    std::vector<ParamTensor*> ps{&raw};

    const int n = 6;
    Tensor x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(-0.95, 0.95);

    auto run = [&](bool want_grad) {
        diff::zero_grads(ps);
        diff::Tape t;
        diff::SplineGraphConfig cfg{bins, 1.0, 1e-3, 1e-3};
        auto knots = diff::build_spline_knots(t, t.broadcast_rows(t.param(raw), n), cfg);
        auto ap = diff::rqs_apply_graph(t, t.constant(x), knots, cfg);
        diff::Var loss = t.mean_all(t.add(t.square_(ap.y), ap.logdet));
        double lv = t.scalar_value(loss);
        if (want_grad) t.backward(loss);
        return lv;
    };
    run(true);
    auto analytic = fftest::pack_grads(ps);
    auto fd = fftest::finite_diff_grad(
        [&](const std::vector<double>& flat) {
            fftest::unpack(flat, ps);
            return run(false);
        },
        fftest::pack(ps), 1e-6);
    for (size_t i = 0; i < fd.size(); ++i) CHECK(fftest::rel_err(analytic[i], fd[i]) < 1e-4);
}
