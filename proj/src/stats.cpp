#include "ff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ff/errors.hpp"

namespace ff::stats {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation, then one Halley step.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double expit(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("logit: p must be in (0,1)");
    return std::log(p / (1.0 - p));
}

namespace {

// Series expansion of P(a,x), converges for x < a+1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), converges for x >= a+1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0) throw ValidationError("gamma_p: shape must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_p_inv(double a, double p) {
    if (!(p >= 0.0 && p < 1.0)) throw ValidationError("gamma_p_inv: p must be in [0,1)");
    if (p == 0.0) return 0.0;
    // Wilson-Hilferty start, Newton in log space for robustness near 0.
    double g = std::lgamma(a);
    double x;
    if (a > 1.0) {
        double t = normal_quantile(p);
        double w = 2.0 / (9.0 * a);
        x = a * std::pow(1.0 - w + t * std::sqrt(w), 3.0);
        if (x <= 0.0) x = 1e-8;
    } else {
        x = std::pow(p * a * std::exp(g + a * 1e-10), 1.0 / a);
        if (!(x > 0.0) || !std::isfinite(x)) x = 1e-8;
    }
    for (int it = 0; it < 60; ++it) {
        double f = gamma_p(a, x) - p;
        double dens = std::exp(-x + (a - 1.0) * std::log(x) - g);
        if (dens <= 0.0) break;
        double dx = f / dens;
        // damped step, keep x positive
        double xn = x - dx;
        if (xn <= 0.0) xn = 0.5 * x;
        if (std::fabs(xn - x) < 1e-14 * (1.0 + x)) {
            x = xn;
            break;
        }
        x = xn;
    }
    return x;
}

double gamma_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale));
}

double gamma_quantile(double p, double shape, double scale) { return scale * gamma_p_inv(shape, p); }

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double ks_uniform_statistic(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double hi = (static_cast<double>(i) + 1.0) / n - xs[i];
        double lo = xs[i] - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

double ks_pvalue(double d, int n) {
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw DimensionError("pearson: size mismatch");
    double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> uniform_ranks(std::span<const double> xs) {
    const size_t n = xs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg / (static_cast<double>(n) + 1.0);
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    auto rx = uniform_ranks(x);
    auto ry = uniform_ranks(y);
    return pearson(rx, ry);
}

SymMatrix cholesky(const SymMatrix& a) {
    const int n = a.n;
    SymMatrix l(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0.0) throw NumericError("cholesky: matrix not positive definite");
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

std::vector<double> jacobi_eigen(const SymMatrix& a0, SymMatrix& vectors) {
    const int n = a0.n;
    SymMatrix a = a0;
    vectors = SymMatrix(n);
    for (int i = 0; i < n; ++i) vectors.at(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-22) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(a.at(p, q)) < 1e-300) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * a.at(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = vectors.at(k, p), vkq = vectors.at(k, q);
                    vectors.at(k, p) = c * vkp - s * vkq;
                    vectors.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a.at(i, i);
    return ev;
}

SymMatrix nearest_pd_correlation(const SymMatrix& a, double floor_ev) {
    SymMatrix vecs;
    auto ev = jacobi_eigen(a, vecs);
    bool ok = true;
    for (double e : ev)
        if (e < floor_ev) ok = false;
    if (ok) return a;
    const int n = a.n;
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += vecs.at(i, k) * std::max(ev[k], floor_ev) * vecs.at(j, k);
            out.at(i, j) = s;
        }
    // renormalize to unit diagonal
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) out.at(i, j) /= std::sqrt(out.at(i, i) * out.at(j, j));
    for (int i = 0; i < n; ++i) out.at(i, i) = 1.0;
    return out;
}

GaussianCopulaDensity::GaussianCopulaDensity(const SymMatrix& pearson) : chol_(cholesky(pearson)) {
    for (int i = 0; i < chol_.n; ++i) half_logdet_ += std::log(chol_.at(i, i));
}

double GaussianCopulaDensity::logpdf_scores(std::span<const double> q) const {
    const int n = chol_.n;
    if (static_cast<int>(q.size()) != n) throw DimensionError("GaussianCopulaDensity: score size mismatch");
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double s = q[static_cast<size_t>(i)];
        for (int k = 0; k < i; ++k) s -= chol_.at(i, k) * w[static_cast<size_t>(k)];
        w[static_cast<size_t>(i)] = s / chol_.at(i, i);
    }
    double quad = 0.0, qq = 0.0;
    for (int i = 0; i < n; ++i) {
        quad += w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
        qq += q[static_cast<size_t>(i)] * q[static_cast<size_t>(i)];
    }
    return -half_logdet_ - 0.5 * quad + 0.5 * qq;
}

double GaussianCopulaDensity::logpdf(std::span<const double> u) const {
    std::vector<double> q(u.size());
    for (size_t i = 0; i < u.size(); ++i) q[i] = normal_quantile(u[i]);
    return logpdf_scores(q);
}

double gaussian_copula_logpdf(const SymMatrix& pearson, std::span<const double> u) {
    return GaussianCopulaDensity(pearson).logpdf(u);
}

double spearman_to_pearson(double rs) {
    if (std::fabs(rs) > 1.0) throw ValidationError("spearman_to_pearson: |rs| must be <= 1");
    return 2.0 * std::sin(pi * rs / 6.0);
}

}  // namespace ff::stats
