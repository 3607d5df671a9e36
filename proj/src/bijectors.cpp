#include "ff/bijectors.hpp"

#include <algorithm>
#include <cmath>

namespace ff::bij {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double inv_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

// Index k with knots[k] <= v < knots[k+1], clamped to a valid bin.
int find_bin(const std::vector<double>& knots, double v) {
    int k = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), v) - knots.begin()) - 1;
    return std::clamp(k, 0, static_cast<int>(knots.size()) - 2);
}

}  // namespace

double rqs_deriv_preactivation_shift(double min_deriv) { return inv_softplus(1.0 - min_deriv); }

void RqsSpline::validate() const {
    const size_t n = x_knots.size();
    if (n < 2 || y_knots.size() != n || derivs.size() != n)
        throw ValidationError("RqsSpline: knot arrays must share length >= 2");
    for (size_t i = 1; i < n; ++i) {
        if (!(x_knots[i] > x_knots[i - 1]) || !(y_knots[i] > y_knots[i - 1]))
            throw ValidationError("RqsSpline: knots must be strictly increasing");
    }
    for (double d : derivs)
        if (!(d > 0.0)) throw ValidationError("RqsSpline: derivatives must be positive");
}

RqsSpline RqsSpline::identity(int bins, double bound) {
    if (bins < 1 || bound <= 0.0) throw ValidationError("RqsSpline: bins >= 1, bound > 0 required");
    RqsSpline s;
    s.bound = bound;
    s.x_knots.resize(static_cast<size_t>(bins) + 1);
    for (int k = 0; k <= bins; ++k)
        s.x_knots[static_cast<size_t>(k)] = -bound + 2.0 * bound * static_cast<double>(k) / bins;
    s.x_knots.front() = -bound;
    s.x_knots.back() = bound;
    s.y_knots = s.x_knots;
    s.derivs.assign(static_cast<size_t>(bins) + 1, 1.0);
    return s;
}

RqsSpline RqsSpline::from_raw(std::span<const double> raw, int bins, double bound, double min_bin,
                              double min_deriv) {
    if (static_cast<int>(raw.size()) != 3 * bins - 1)
        throw DimensionError("RqsSpline::from_raw: need 3*bins-1 raw values");
    RqsSpline s;
    s.bound = bound;
    auto build_knots = [&](std::span<const double> logits, std::vector<double>& knots) {
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        std::vector<double> e(logits.size());
        double sum = 0.0;
        for (size_t i = 0; i < logits.size(); ++i) {
            e[i] = std::exp(logits[i] - mx);
            sum += e[i];
        }
        knots.assign(logits.size() + 1, 0.0);
        knots[0] = -bound;
        double cum = 0.0;
        for (size_t i = 0; i < logits.size(); ++i) {
            double w = min_bin + (1.0 - min_bin * static_cast<double>(bins)) * (e[i] / sum);
            cum += w;
            knots[i + 1] = -bound + 2.0 * bound * cum;
        }
        return;
    };
    build_knots(raw.subspan(0, static_cast<size_t>(bins)), s.x_knots);
    build_knots(raw.subspan(static_cast<size_t>(bins), static_cast<size_t>(bins)), s.y_knots);
    const double c = rqs_deriv_preactivation_shift(min_deriv);
    s.derivs.assign(static_cast<size_t>(bins) + 1, 1.0);
    for (int i = 0; i < bins - 1; ++i)
        s.derivs[static_cast<size_t>(i) + 1] = min_deriv + softplus(raw[static_cast<size_t>(2 * bins + i)] + c);
    return s;
}

Result rqs_forward(const RqsSpline& s, double x) {
    if (x <= -s.bound || x >= s.bound) return {x, 0.0};
    const int k = find_bin(s.x_knots, x);
    const double xk = s.x_knots[static_cast<size_t>(k)], xk1 = s.x_knots[static_cast<size_t>(k) + 1];
    const double yk = s.y_knots[static_cast<size_t>(k)], yk1 = s.y_knots[static_cast<size_t>(k) + 1];
    const double dk = s.derivs[static_cast<size_t>(k)], dk1 = s.derivs[static_cast<size_t>(k) + 1];
    const double w = xk1 - xk, h = yk1 - yk;
    const double sl = h / w;
    const double xi = (x - xk) / w;
    const double omxi = 1.0 - xi;
    const double den = sl + (dk1 + dk - 2.0 * sl) * xi * omxi;
    const double y = yk + h * (sl * xi * xi + dk * xi * omxi) / den;
    const double deriv = sl * sl * (dk1 * xi * xi + 2.0 * sl * xi * omxi + dk * omxi * omxi) / (den * den);
    return {y, std::log(deriv)};
}

Result rqs_inverse(const RqsSpline& s, double y) {
    if (y <= -s.bound || y >= s.bound) return {y, 0.0};
    const int k = find_bin(s.y_knots, y);
    const double xk = s.x_knots[static_cast<size_t>(k)], xk1 = s.x_knots[static_cast<size_t>(k) + 1];
    const double yk = s.y_knots[static_cast<size_t>(k)], yk1 = s.y_knots[static_cast<size_t>(k) + 1];
    const double dk = s.derivs[static_cast<size_t>(k)], dk1 = s.derivs[static_cast<size_t>(k) + 1];
    const double w = xk1 - xk, h = yk1 - yk;
    const double sl = h / w;
    const double r = y - yk;
    const double term = dk1 + dk - 2.0 * sl;
    const double a = h * (sl - dk) + r * term;
    const double b = h * dk - r * term;
    const double c = -sl * r;
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    const double xi = 2.0 * c / (-b - std::sqrt(disc));
    const double xic = std::clamp(xi, 0.0, 1.0);
    const double x = xk + w * xic;
    const double omxi = 1.0 - xic;
    const double den = sl + term * xic * omxi;
    const double deriv = sl * sl * (dk1 * xic * xic + 2.0 * sl * xic * omxi + dk * omxi * omxi) / (den * den);
    return {x, -std::log(deriv)};
}

Univariate identity_bijector() { return Univariate{}; }

Univariate affine_bijector(double scale, double shift) {
    if (scale == 0.0) throw ValidationError("affine_bijector: scale must be nonzero");
    Univariate b;
    b.kind = Kind::Affine;
    b.scale = scale;
    b.shift = shift;
    return b;
}

Univariate affine_between(Interval from, Interval to) {
    if (!(std::isfinite(from.lo) && std::isfinite(from.hi) && std::isfinite(to.lo) && std::isfinite(to.hi)))
        throw ValidationError("affine_between: intervals must be finite");
    double scale = (to.hi - to.lo) / (from.hi - from.lo);
    Univariate b = affine_bijector(scale, to.lo - scale * from.lo);
    b.domain = from;
    b.codomain = to;
    return b;
}

Univariate tanh_bijector() {
    Univariate b;
    b.kind = Kind::Tanh;
    b.codomain = {-1.0, 1.0};
    return b;
}

Univariate rqs_bijector(RqsSpline s) {
    s.validate();
    Univariate b;
    b.kind = Kind::Rqs;
    b.domain = {-s.bound, s.bound};
    b.codomain = {-s.bound, s.bound};
    b.spline = std::move(s);
    return b;
}

Result forward(const Univariate& b, double x) {
    switch (b.kind) {
        case Kind::Identity: return {x, 0.0};
        case Kind::Affine: return {b.scale * x + b.shift, std::log(std::fabs(b.scale))};
        case Kind::Tanh: {
            double y = std::tanh(x);
            // log(1 - tanh^2 x) computed stably as 2(log 2 - x - softplus(-2x))
            double ld = 2.0 * (std::log(2.0) - x - (x > -15.0 ? std::log1p(std::exp(-2.0 * x)) : -2.0 * x));
            return {y, ld};
        }
        case Kind::Rqs: return rqs_forward(b.spline, x);
    }
    throw ValidationError("forward: unknown bijector kind");
}

Result inverse(const Univariate& b, double y) {
    switch (b.kind) {
        case Kind::Identity: return {y, 0.0};
        case Kind::Affine: return {(y - b.shift) / b.scale, -std::log(std::fabs(b.scale))};
        case Kind::Tanh: {
            if (!(y > -1.0 && y < 1.0)) throw ValidationError("tanh inverse: input outside (-1,1)");
            double x = 0.5 * (std::log1p(y) - std::log1p(-y));
            double ld = 2.0 * (std::log(2.0) - x - (x > -15.0 ? std::log1p(std::exp(-2.0 * x)) : -2.0 * x));
            return {x, -ld};
        }
        case Kind::Rqs: return rqs_inverse(b.spline, y);
    }
    throw ValidationError("inverse: unknown bijector kind");
}

Chain compose(std::vector<Univariate> parts) {
    Chain c;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!parts[i + 1].domain.contains(parts[i].codomain))
            throw ValidationError("compose: codomain of part " + std::to_string(i) +
                                  " exceeds domain of part " + std::to_string(i + 1));
    }
    if (!parts.empty()) {
        c.domain = parts.front().domain;
        c.codomain = parts.back().codomain;
    }
    c.parts = std::move(parts);
    return c;
}

Result forward(const Chain& c, double x) {
    Result acc{x, 0.0};
    for (const Univariate& b : c.parts) {
        Result r = forward(b, acc.y);
        acc.y = r.y;
        acc.logdet += r.logdet;
    }
    return acc;
}

Result inverse(const Chain& c, double y) {
    Result acc{y, 0.0};
    for (auto it = c.parts.rbegin(); it != c.parts.rend(); ++it) {
        Result r = inverse(*it, acc.y);
        acc.y = r.y;
        acc.logdet += r.logdet;
    }
    return acc;
}

Permutation::Permutation(std::vector<int> p) : perm(std::move(p)) {
    std::vector<char> seen(perm.size(), 0);
    for (int i : perm) {
        if (i < 0 || i >= static_cast<int>(perm.size()) || seen[static_cast<size_t>(i)])
            throw ValidationError("Permutation: indices must form a bijection");
        seen[static_cast<size_t>(i)] = 1;
    }
}

void Permutation::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != perm.size() || out.size() != perm.size())
        throw DimensionError("Permutation: size mismatch");
    for (size_t i = 0; i < perm.size(); ++i) out[i] = in[static_cast<size_t>(perm[i])];
}

void Permutation::apply_inverse(std::span<const double> in, std::span<double> out) const {
    if (in.size() != perm.size() || out.size() != perm.size())
        throw DimensionError("Permutation: size mismatch");
    for (size_t i = 0; i < perm.size(); ++i) out[static_cast<size_t>(perm[i])] = in[i];
}

}  // namespace ff::bij
