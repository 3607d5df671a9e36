#pragma once

#include <limits>
#include <span>
#include <vector>

#include "ff/errors.hpp"

namespace ff::bij {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = -kInf;
    double hi = kInf;
    bool contains(const Interval& inner) const { return inner.lo >= lo && inner.hi <= hi; }
};

struct Result {
    double y = 0.0;
    double logdet = 0.0;  // log|dy/dx| of the applied direction
};

// Monotone rational-quadratic spline on [-bound, bound] with identity tails.
// K bins, K+1 knots; boundary derivatives pinned to 1 so the identity tails
// join C1.
struct RqsSpline {
    double bound = 1.0;
    std::vector<double> x_knots;
    std::vector<double> y_knots;
    std::vector<double> derivs;

    int bins() const { return static_cast<int>(x_knots.size()) - 1; }
    void validate() const;

    static RqsSpline identity(int bins, double bound);
    // raw has 3*bins-1 entries: bin-width logits, bin-height logits, interior
    // derivative pre-activations. Same parameterisation as the training path:
    // softmax widths/heights floored at min_bin, derivatives
    // min_deriv + softplus(raw + c) with c chosen so raw = 0 gives slope 1.
    static RqsSpline from_raw(std::span<const double> raw, int bins, double bound, double min_bin = 1e-3,
                              double min_deriv = 1e-3);
};

Result rqs_forward(const RqsSpline& s, double x);
Result rqs_inverse(const RqsSpline& s, double y);

double rqs_deriv_preactivation_shift(double min_deriv);  // the constant c above

enum class Kind { Identity, Affine, Tanh, Rqs };

// Value-type univariate bijector; every variant exposes an exact inverse.
struct Univariate {
    Kind kind = Kind::Identity;
    double scale = 1.0;
    double shift = 0.0;
    RqsSpline spline;
    Interval domain{-kInf, kInf};
    Interval codomain{-kInf, kInf};
};

Univariate identity_bijector();
Univariate affine_bijector(double scale, double shift);
// Affine with declared interval endpoints, for composition checking.
Univariate affine_between(Interval from, Interval to);
Univariate tanh_bijector();
Univariate rqs_bijector(RqsSpline s);

Result forward(const Univariate& b, double x);
Result inverse(const Univariate& b, double y);

// Ordered composition: forward applies front-to-back, inverse back-to-front,
// log-determinants add. Adjacent codomain/domain intervals must nest.
struct Chain {
    std::vector<Univariate> parts;
    Interval domain{-kInf, kInf};
    Interval codomain{-kInf, kInf};
};

Chain compose(std::vector<Univariate> parts);
Result forward(const Chain& c, double x);
Result inverse(const Chain& c, double y);

// Fixed permutation of vector coordinates; log-determinant zero.
struct Permutation {
    std::vector<int> perm;  // out[i] = in[perm[i]]

    explicit Permutation(std::vector<int> p);
    Permutation() = default;
    void apply(std::span<const double> in, std::span<double> out) const;
    void apply_inverse(std::span<const double> in, std::span<double> out) const;
};

}  // namespace ff::bij
