#include "ff/spline_graph.hpp"

#include <algorithm>
#include <cmath>

namespace ff::diff {

SplineKnotVars build_spline_knots(Tape& tape, Var raw, const SplineGraphConfig& cfg) {
    const int k = cfg.bins;
    const Tensor& rv = tape.val(raw);
    if (rv.cols != 3 * k - 1) throw DimensionError("build_spline_knots: raw must have 3*bins-1 columns");
    const int rows = rv.rows;

    auto knots_from_logits = [&](Var logits) {
        Var sm = tape.softmax_rows(logits);
        Var widths = tape.affine(sm, 1.0 - cfg.min_bin * k, cfg.min_bin);
        Var cum = tape.cumsum_rows(widths);
        Var inner = tape.affine(cum, 2.0 * cfg.bound, -cfg.bound);
        Var lead = tape.constant(Tensor(rows, 1, -cfg.bound));
        return tape.concat_cols({lead, inner});
    };

    SplineKnotVars out;
    out.x_knots = knots_from_logits(tape.slice_cols(raw, 0, k));
    out.y_knots = knots_from_logits(tape.slice_cols(raw, k, 2 * k));

    const double c = bij::rqs_deriv_preactivation_shift(cfg.min_deriv);
    Var interior = tape.affine(tape.softplus_(tape.affine(tape.slice_cols(raw, 2 * k, 3 * k - 1), 1.0, c)),
                               1.0, cfg.min_deriv);
    Var ones = tape.constant(Tensor(rows, 1, 1.0));
    out.derivs = tape.concat_cols({ones, interior, ones});
    return out;
}

SplineApplyVars rqs_apply_graph(Tape& tape, Var x, const SplineKnotVars& knots, const SplineGraphConfig& cfg) {
    const Tensor& xv = tape.val(x);
    if (xv.cols != 1) throw DimensionError("rqs_apply_graph: x must be a column");
    const int rows = xv.rows;
    const double b = cfg.bound;

    std::vector<uint8_t> inside(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) inside[static_cast<size_t>(i)] = (xv(i, 0) > -b && xv(i, 0) < b) ? 1 : 0;

    Var zero_col = tape.constant(Tensor(rows, 1, 0.0));
    Var xc = tape.where(inside, x, zero_col);

    // Bin lookup on forward values; constant during the backward pass.
    const Tensor& xk_all = tape.val(knots.x_knots);
    const Tensor& xcv = tape.val(xc);
    std::vector<int> bin(static_cast<size_t>(rows)), bin1(static_cast<size_t>(rows));
    const int nk = xk_all.cols;
    for (int i = 0; i < rows; ++i) {
        const double* row = &xk_all.v[static_cast<size_t>(i) * nk];
        int lo = static_cast<int>(std::upper_bound(row, row + nk, xcv(i, 0)) - row) - 1;
        lo = std::clamp(lo, 0, nk - 2);
        bin[static_cast<size_t>(i)] = lo;
        bin1[static_cast<size_t>(i)] = lo + 1;
    }

    Var xk = tape.gather_cols(knots.x_knots, bin);
    Var xk1 = tape.gather_cols(knots.x_knots, bin1);
    Var yk = tape.gather_cols(knots.y_knots, bin);
    Var yk1 = tape.gather_cols(knots.y_knots, bin1);
    Var dk = tape.gather_cols(knots.derivs, bin);
    Var dk1 = tape.gather_cols(knots.derivs, bin1);

    Var w = tape.sub(xk1, xk);
    Var h = tape.sub(yk1, yk);
    Var sl = tape.div(h, w);
    Var xi = tape.div(tape.sub(xc, xk), w);
    Var omxi = tape.affine(xi, -1.0, 1.0);
    Var xiom = tape.mul(xi, omxi);
    Var term = tape.sub(tape.add(dk1, dk), tape.affine(sl, 2.0, 0.0));
    Var den = tape.add(sl, tape.mul(term, xiom));
    Var num = tape.mul(h, tape.add(tape.mul(sl, tape.square_(xi)), tape.mul(dk, xiom)));
    Var y_in = tape.add(yk, tape.div(num, den));

    Var dnum = tape.mul(tape.square_(sl),
                        tape.add(tape.add(tape.mul(dk1, tape.square_(xi)), tape.mul(tape.affine(sl, 2.0, 0.0), xiom)),
                                 tape.mul(dk, tape.square_(omxi))));
    Var deriv = tape.div(dnum, tape.square_(den));
    Var ld_in = tape.log_(deriv);

    SplineApplyVars out;
    out.y = tape.where(inside, y_in, x);
    out.logdet = tape.where(inside, ld_in, zero_col);
    return out;
}

Var clamp_unit_interval(Tape& tape, Var v, double eps) {
    const Tensor& tv = tape.val(v);
    std::vector<uint8_t> above(tv.size()), below(tv.size());
    for (size_t i = 0; i < tv.v.size(); ++i) {
        above[i] = tv.v[i] > eps ? 1 : 0;
        below[i] = tv.v[i] < 1.0 - eps ? 1 : 0;
    }
    Var lo = tape.constant(Tensor(tv.rows, tv.cols, eps));
    Var hi = tape.constant(Tensor(tv.rows, tv.cols, 1.0 - eps));
    return tape.where(below, tape.where(above, v, lo), hi);
}

Var tanh_logdet_graph(Tape& tape, Var x) {
    Var sp = tape.softplus_(tape.affine(x, -2.0, 0.0));
    return tape.affine(tape.add(x, sp), -2.0, 2.0 * std::log(2.0));
}

}  // namespace ff::diff
