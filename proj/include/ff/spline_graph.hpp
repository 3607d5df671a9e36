#pragma once

#include "ff/bijectors.hpp"
#include "ff/tape.hpp"

namespace ff::diff {

struct SplineGraphConfig {
    int bins = 8;
    double bound = 1.0;
    double min_bin = 1e-3;
    double min_deriv = 1e-3;
};

// Per-row spline knots assembled on the tape from raw conditioner output
// (rows x (3*bins-1)). Same parameterisation as bij::RqsSpline::from_raw.
struct SplineKnotVars {
    Var x_knots;  // rows x (bins+1)
    Var y_knots;
    Var derivs;
};

SplineKnotVars build_spline_knots(Tape& tape, Var raw, const SplineGraphConfig& cfg);

struct SplineApplyVars {
    Var y;       // rows x 1
    Var logdet;  // rows x 1, zero outside [-bound, bound]
};

// Training-direction spline transform, elementwise over a column of inputs
// with per-row knots. Bin selection happens at forward value time; the
// transform itself is ordinary tape arithmetic, so gradients are exact.
SplineApplyVars rqs_apply_graph(Tape& tape, Var x, const SplineKnotVars& knots, const SplineGraphConfig& cfg);

// Clamp values into [eps, 1-eps]; gradient flows only through unclamped rows.
Var clamp_unit_interval(Tape& tape, Var v, double eps);

// Stable log|d tanh(x)/dx| = 2(log 2 - x - softplus(-2x)) for y = tanh(x).
Var tanh_logdet_graph(Tape& tape, Var x);

}  // namespace ff::diff
