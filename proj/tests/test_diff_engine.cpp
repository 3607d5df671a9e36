#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ff/adam.hpp"
#include "ff/made.hpp"
#include "ff/rng.hpp"
#include "ff/tape.hpp"
#include "testutil.hpp"

using namespace ff;
using diff::Tape;
using diff::Var;

TEST_CASE("grad of sum of squares") {
    ParamTensor p("p", 1, 2);
    p.value(0, 0) = 1.0;
    p.value(0, 1) = -2.0;
    Tape t;
    Var loss = t.sum_all(t.square_(t.param(p)));
    CHECK(t.scalar_value(loss) == doctest::Approx(5.0));
    t.backward(loss);
    CHECK(p.grad(0, 0) == doctest::Approx(2.0));
    CHECK(p.grad(0, 1) == doctest::Approx(-4.0));
}

TEST_CASE("grad of constant loss is zero") {
    ParamTensor p("p", 2, 2);
    p.value.fill(3.0);
    Tape t;
    Var x = t.param(p);
    (void)x;
    Var loss = t.sum_all(t.constant(Tensor(1, 1, 7.0)));
    t.backward(loss);
    for (double g : p.grad.v) CHECK(g == 0.0);
}

TEST_CASE("two-layer net gradient matches central finite differences") {
    Rng rng(1234);
    const int n = 7, in = 3, hid = 5;
    Tensor x(n, in), target(n, 1);
    for (double& v : x.v) v = rng.normal();
    for (double& v : target.v) v = rng.normal();

    ParamTensor w1("w1", in, hid), b1("b1", 1, hid), w2("w2", hid, 1), b2("b2", 1, 1);
    for (double& v : w1.value.v) v = 0.4 * rng.normal();
    for (double& v : w2.value.v) v = 0.4 * rng.normal();
    b1.value.fill(0.1);
    std::vector<ParamTensor*> ps{&w1, &b1, &w2, &b2};

    auto run = [&](bool want_grad) {
        diff::zero_grads(ps);
        Tape t;
        Var h = t.tanh_(t.add_row(t.matmul(t.constant(x), t.param(w1)), t.param(b1)));
        Var out = t.add_row(t.matmul(h, t.param(w2)), t.param(b2));
        Var loss = t.mean_all(t.square_(t.sub(out, t.constant(target))));
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
        fftest::pack(ps));
    REQUIRE(analytic.size() == fd.size());
    for (size_t i = 0; i < fd.size(); ++i) CHECK(fftest::rel_err(analytic[i], fd[i]) < 1e-4);
}

TEST_CASE("gradient agreement across the remaining op set") {
    // One composite graph touching div, exp, log, softplus, sigmoid,
    // normal_cdf, softmax, cumsum, gathers, slices, concat, where, broadcasts.
    Rng rng(99);
    ParamTensor a("a", 4, 6);
    for (double& v : a.value.v) v = 0.3 * rng.normal();
    ParamTensor s("s", 1, 1);
    s.value.v[0] = 0.7;
    std::vector<ParamTensor*> ps{&a, &s};

    std::vector<int> idx{0, 2, 1, 3};
    std::vector<uint8_t> sel{1, 0, 1, 0};

    auto run = [&](bool want_grad) {
        diff::zero_grads(ps);
        Tape t;
        Var av = t.param(a);
        Var sm = t.softmax_rows(t.slice_cols(av, 0, 4));
        Var cs = t.cumsum_rows(sm);
        Var g1 = t.gather_cols(cs, idx);
        Var rest = t.slice_cols(av, 4, 6);
        Var e = t.exp_(t.affine(rest, 0.5, 0.0));
        Var lg = t.log_(t.add(e, t.constant(Tensor(4, 2, 1.0))));
        Var sp = t.softplus_(lg);
        Var sg = t.sigmoid_(t.row_sum(sp));
        Var nc = t.normal_cdf_(t.mul_scalar_var(sg, t.param(s)));
        Var dv = t.div(g1, t.affine(nc, 1.0, 1.5));
        Var wh = t.where(sel, dv, t.square_(g1));
        Var cc = t.concat_cols({wh, t.broadcast_cols(sg, 3)});
        Var bc = t.matmul(t.reshape(cc, 2, 8), t.constant(Tensor(8, 1, 0.25)));
        Var loss = t.mean_all(t.add_scalar_var(bc, t.param(s)));
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

TEST_CASE("non-finite loss reports the offending op") {
    ParamTensor p("p", 1, 1);
    p.value.v[0] = -1.0;
    Tape t;
    Var loss = t.sum_all(t.log_(t.param(p)));
    CHECK_THROWS_AS(t.backward(loss), NumericError);
}

TEST_CASE("adam: zero grads leave params unchanged") {
    ParamTensor p("p", 2, 1);
    p.value(0, 0) = 0.5;
    p.value(1, 0) = -0.25;
    diff::AdamState st;
    st.lr = 0.1;
    diff::zero_grads({&p});
    diff::adam_step({&p}, st);
    CHECK(p.value(0, 0) == doctest::Approx(0.5));
    CHECK(p.value(1, 0) == doctest::Approx(-0.25));
}

TEST_CASE("adam: first bias-corrected step moves by -lr") {
    ParamTensor p("p", 1, 1);
    p.value.v[0] = 0.0;
    p.grad.v[0] = 1.0;
    diff::AdamState st;
    st.lr = 0.1;
    diff::adam_step({&p}, st);
    CHECK(p.value.v[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(st.step == 1);
}

TEST_CASE("adam converges on a quadratic") {
    ParamTensor p("p", 1, 1);
    p.value.v[0] = 0.0;
    diff::AdamState st;
    st.lr = 0.05;
    for (int i = 0; i < 500; ++i) {
        diff::zero_grads({&p});
        Tape t;
        Var loss = t.sum_all(t.square_(t.affine(t.param(p), 1.0, -3.0)));
        t.backward(loss);
        diff::adam_step({&p}, st);
    }
    CHECK(std::fabs(p.value.v[0] - 3.0) < 1e-2);
}

TEST_CASE("adam rejects non-finite gradients") {
    ParamTensor p("p", 1, 1);
    p.grad.v[0] = std::nan("");
    diff::AdamState st;
    CHECK_THROWS_AS(diff::adam_step({&p}, st), NumericError);
}

TEST_CASE("determinism: same seed gives bit-identical parameters after k steps") {
    auto train = [](uint64_t seed) {
        Rng rng(seed);
        Tensor x(32, 3), yt(32, 3);
        for (double& v : x.v) v = rng.normal();
        for (double& v : yt.v) v = rng.normal();
        diff::MaskedMlp mlp({1, 2, 3}, 0, {1, 2, 3}, 16, 2);
        Rng init = Rng::substream(seed, "init");
        mlp.init(init, false);
        auto ps = mlp.parameters();
        diff::AdamState st;
        st.lr = 1e-2;
        for (int e = 0; e < 25; ++e) {
            diff::zero_grads(ps);
            Tape t;
            Var out = mlp.forward(t, t.constant(x), std::nullopt);
            Var loss = t.mean_all(t.square_(t.sub(out, t.constant(yt))));
            t.backward(loss);
            diff::adam_step(ps, st);
        }
        std::vector<double> flat;
        for (auto* p : ps) flat.insert(flat.end(), p->value.v.begin(), p->value.v.end());
        return flat;
    };
    auto r1 = train(7);
    auto r2 = train(7);
    REQUIRE(r1.size() == r2.size());
    for (size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
}

TEST_CASE("masked mlp: output depends only on lower-degree inputs") {
    Rng rng(5);
    const int din = 3;
    const int dout = 6;
    std::vector<int> in_deg{1, 2, 3};
    std::vector<int> out_deg{1, 1, 2, 2, 3, 3};
    diff::MaskedMlp mlp(in_deg, 0, out_deg, 12, 2);
    mlp.init(rng, false);

    Tensor x(1, din);
    for (double& v : x.v) v = rng.normal();
    auto out_at = [&](const Tensor& xin) { return mlp.forward_frozen(xin, nullptr); };
    Tensor base = out_at(x);

    // numerical Jacobian: d out_d / d x_j must vanish for j >= degree(d)
    const double h = 1e-6;
    for (int j = 0; j < din; ++j) {
        Tensor xp = x, xm = x;
        xp(0, j) += h;
        xm(0, j) -= h;
        Tensor op = out_at(xp), om = out_at(xm);
        for (int d = 0; d < dout; ++d) {
            double deriv = (op(0, d) - om(0, d)) / (2 * h);
            if (in_deg[static_cast<size_t>(j)] >= out_deg[static_cast<size_t>(d)])
                CHECK(deriv == 0.0);  // exactly zero: masked weights are multiplied by 0
        }
    }
}

TEST_CASE("masked mlp: perturbing masked weights never changes the output") {
    Rng rng(11);
    diff::MaskedMlp mlp({1, 2}, 1, {1, 2}, 8, 1);
    mlp.init(rng, false);
    Tensor x(4, 2), ctx(4, 1);
    for (double& v : x.v) v = rng.normal();
    for (double& v : ctx.v) v = rng.normal();
    Tensor before = mlp.forward_frozen(x, &ctx);
    for (auto& layer : mlp.layers()) {
        for (int i = 0; i < layer.mask.rows; ++i)
            for (int j = 0; j < layer.mask.cols; ++j)
                if (layer.mask(i, j) == 0.0) layer.weight.value(i, j) += 100.0;
    }
    Tensor after = mlp.forward_frozen(x, &ctx);
    for (size_t i = 0; i < before.v.size(); ++i) CHECK(before.v[i] == after.v[i]);
}

TEST_CASE("masked mlp: zero weights and biases give zero output") {
    diff::MaskedMlp mlp({1, 2}, 0, {1, 2}, 8, 1);
    for (auto& layer : mlp.layers()) {
        layer.weight.value.fill(0.0);
        layer.bias.value.fill(0.0);
    }
    Tensor x(3, 2);
    x.fill(1.7);
    Tensor out = mlp.forward_frozen(x, nullptr);
    for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("masked mlp rejects mismatched input width") {
    diff::MaskedMlp mlp({1, 2}, 0, {1, 2}, 8, 1);
    Tape t;
    Var x = t.constant(Tensor(3, 3, 0.0));
    CHECK_THROWS_AS(mlp.forward(t, x, std::nullopt), DimensionError);
}
