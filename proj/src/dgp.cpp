#include "ff/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "ff/errors.hpp"
#include "ff/rng.hpp"

namespace ff::dgp {

void DgpSpec::validate() const {
    const int d = dim();
    if (d < 1) throw ValidationError("DgpSpec: need at least one covariate");
    if (spearman.n != d + 1) throw DimensionError("DgpSpec: spearman matrix must be (D+1)x(D+1)");
    for (int i = 0; i < spearman.n; ++i) {
        if (spearman.at(i, i) != 1.0) throw ValidationError("DgpSpec: spearman diagonal must be 1");
        for (int j = 0; j < spearman.n; ++j) {
            if (std::fabs(spearman.at(i, j) - spearman.at(j, i)) > 1e-12)
                throw ValidationError("DgpSpec: spearman matrix must be symmetric");
            if (std::fabs(spearman.at(i, j)) > 1.0) throw ValidationError("DgpSpec: |spearman| must be <= 1");
        }
    }
    if (sigma <= 0.0) throw ValidationError("DgpSpec: sigma must be positive");
    if (static_cast<int>(prop_coefs.size()) != d)
        throw DimensionError("DgpSpec: one propensity coefficient per covariate required");
    for (const auto& [i, j, c] : prop_interactions) {
        (void)c;
        if (i < 0 || j < 0 || i >= d || j >= d) throw ValidationError("DgpSpec: interaction index out of range");
    }
    for (const auto& m : z_margins) {
        if (m.kind == Margin::Kind::Gamma && (m.mu <= 0.0 || m.phi <= 0.0))
            throw ValidationError("DgpSpec: gamma margin needs mu, phi > 0");
        if (m.kind == Margin::Kind::Bernoulli && !(m.p > 0.0 && m.p < 1.0))
            throw ValidationError("DgpSpec: bernoulli margin needs p in (0,1)");
    }
}

double DgpSpec::propensity(std::span<const double> z) const {
    double lin = prop_intercept;
    for (size_t j = 0; j < prop_coefs.size(); ++j) lin += prop_coefs[j] * z[j];
    for (const auto& [i, j, c] : prop_interactions)
        lin += c * z[static_cast<size_t>(i)] * z[static_cast<size_t>(j)];
    return stats::expit(lin);
}

double spearman_to_pearson(double rs) { return stats::spearman_to_pearson(rs); }

stats::SymMatrix pearson_from_spearman(const stats::SymMatrix& spearman) {
    stats::SymMatrix p(spearman.n);
    for (int i = 0; i < spearman.n; ++i)
        for (int j = 0; j < spearman.n; ++j)
            p.at(i, j) = i == j ? 1.0 : spearman_to_pearson(spearman.at(i, j));
    return stats::nearest_pd_correlation(p, 1e-6);
}

namespace {

double margin_quantile(const DgpSpec::Margin& m, double v) {
    if (m.kind == DgpSpec::Margin::Kind::Gamma) return stats::gamma_quantile(v, 1.0 / m.phi, m.mu * m.phi);
    return v <= 1.0 - m.p ? 0.0 : 1.0;
}

double margin_log_density(const DgpSpec::Margin& m, double z) {
    if (m.kind == DgpSpec::Margin::Kind::Gamma)
        return std::log(stats::gamma_pdf(z, 1.0 / m.phi, m.mu * m.phi));
    if (z == 0.0) return std::log(1.0 - m.p);
    if (z == 1.0) return std::log(m.p);
    throw ValidationError("DgpSpec: bernoulli covariate value must be 0 or 1");
}

// [F(z-), F(z)] of a discrete margin
std::pair<double, double> bernoulli_rank_interval(const DgpSpec::Margin& m, double z) {
    if (z == 0.0) return {0.0, 1.0 - m.p};
    if (z == 1.0) return {1.0 - m.p, 1.0};
    throw ValidationError("DgpSpec: bernoulli covariate value must be 0 or 1");
}

// 24-point Gauss-Legendre rule on [0,1]
void gauss_legendre_unit(std::vector<double>& x, std::vector<double>& w) {
    const int m = 24;
    x.resize(m);
    w.resize(m);
    for (int i = 0; i < m; ++i) {
        double t = std::cos(stats::pi * (i + 0.75) / (m + 0.5));
        double p0 = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            double p1 = 0.0;
            for (int j = 0; j < m; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
            }
            dp = m * (t * p0 - p1) / (t * t - 1.0);
            double t1 = t;
            t = t1 - p0 / dp;
            if (std::fabs(t - t1) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = 0.5 * (1.0 - t);
        w[static_cast<size_t>(i)] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

DgpSample simulate_dgp(const DgpSpec& spec, int64_t n, uint64_t seed) {
    spec.validate();
    if (n < 1) throw ValidationError("simulate_dgp: n must be >= 1");
    const int d = spec.dim();
    stats::SymMatrix pearson = pearson_from_spearman(spec.spearman);
    stats::SymMatrix chol = stats::cholesky(pearson);

    DgpSample out;
    out.true_ate = spec.ate;
    out.v_y.resize(static_cast<size_t>(n));
    out.data.z = Tensor(static_cast<int>(n), d);
    out.data.t.resize(static_cast<size_t>(n));
    out.data.y.resize(static_cast<size_t>(n));

    Rng gauss = Rng::substream(seed, "dgp-gaussian");
    Rng treat = Rng::substream(seed, "dgp-treatment");

    std::vector<double> g(static_cast<size_t>(d) + 1), corr(static_cast<size_t>(d) + 1);
    std::vector<double> zrow(static_cast<size_t>(d));
    for (int64_t i = 0; i < n; ++i) {
        for (double& x : g) x = gauss.normal();
        for (int r = 0; r <= d; ++r) {
            double s = 0.0;
            for (int c = 0; c <= r; ++c) s += chol.at(r, c) * g[static_cast<size_t>(c)];
            corr[static_cast<size_t>(r)] = s;
        }
        for (int j = 0; j < d; ++j) {
            double v = stats::normal_cdf(corr[static_cast<size_t>(j)]);
            v = std::clamp(v, 1e-15, 1.0 - 1e-15);
            zrow[static_cast<size_t>(j)] = margin_quantile(spec.z_margins[static_cast<size_t>(j)], v);
            out.data.z(static_cast<int>(i), j) = zrow[static_cast<size_t>(j)];
        }
        double vy = stats::normal_cdf(corr[static_cast<size_t>(d)]);
        vy = std::clamp(vy, 1e-15, 1.0 - 1e-15);
        out.v_y[static_cast<size_t>(i)] = vy;

        double p = spec.propensity(zrow);
        double t = treat.uniform() < p ? 1.0 : 0.0;
        out.data.t[static_cast<size_t>(i)] = t;
        out.data.y[static_cast<size_t>(i)] =
            spec.intercept + spec.ate * t + spec.sigma * stats::normal_quantile(vy);
    }

    Schema schema;
    for (int j = 0; j < d; ++j) {
        SchemaCol c;
        c.name = "z" + std::to_string(j + 1);
        c.role = Role::Covariate;
        c.kind = spec.z_margins[static_cast<size_t>(j)].kind == DgpSpec::Margin::Kind::Gamma
                     ? ColKind::Continuous
                     : ColKind::Discrete;
        schema.cols.push_back(c);
    }
    schema.cols.push_back({"t", Role::Treatment, ColKind::Discrete});
    schema.cols.push_back({"y", Role::Outcome, ColKind::Continuous});
    out.data.schema = std::move(schema);
    return out;
}

double log_density_zy_given_t(const DgpSpec& spec, std::span<const double> z, double y, double t) {
    spec.validate();
    const int d = spec.dim();
    if (static_cast<int>(z.size()) != d) throw DimensionError("log_density_zy_given_t: covariate count mismatch");

    const double zy = (y - spec.intercept - spec.ate * t) / spec.sigma;
    const double vy = std::clamp(stats::normal_cdf(zy), 1e-15, 1.0 - 1e-15);
    double ll = -0.5 * zy * zy - 0.5 * std::log(2.0 * stats::pi) - std::log(spec.sigma);

    stats::GaussianCopulaDensity copula(pearson_from_spearman(spec.spearman));

    std::vector<int> disc;
    std::vector<double> u(static_cast<size_t>(d) + 1);
    for (int j = 0; j < d; ++j) {
        const auto& m = spec.z_margins[static_cast<size_t>(j)];
        if (m.kind == DgpSpec::Margin::Kind::Bernoulli) {
            disc.push_back(j);
        } else {
            double uj = stats::gamma_p(1.0 / m.phi, z[static_cast<size_t>(j)] / (m.mu * m.phi));
            u[static_cast<size_t>(j)] = std::clamp(uj, 1e-15, 1.0 - 1e-15);
            ll += margin_log_density(m, z[static_cast<size_t>(j)]);
        }
    }
    u[static_cast<size_t>(d)] = vy;

    if (disc.empty()) return ll + copula.logpdf(u);
    if (disc.size() > 2)
        throw ValidationError("log_density_zy_given_t: at most two discrete covariates supported");

    std::vector<double> gx, gw;
    gauss_legendre_unit(gx, gw);
    const int m = static_cast<int>(gx.size());

    // integrate the copula density over the rank rectangle of the discrete
    // coordinates; the rectangle mass contains the discrete pmf itself
    double integral = 0.0;
    if (disc.size() == 1) {
        auto [lo, hi] = bernoulli_rank_interval(spec.z_margins[static_cast<size_t>(disc[0])],
                                                z[static_cast<size_t>(disc[0])]);
        for (int a = 0; a < m; ++a) {
            u[static_cast<size_t>(disc[0])] = lo + (hi - lo) * gx[static_cast<size_t>(a)];
            integral += gw[static_cast<size_t>(a)] * (hi - lo) * std::exp(copula.logpdf(u));
        }
    } else {
        auto [lo0, hi0] = bernoulli_rank_interval(spec.z_margins[static_cast<size_t>(disc[0])],
                                                  z[static_cast<size_t>(disc[0])]);
        auto [lo1, hi1] = bernoulli_rank_interval(spec.z_margins[static_cast<size_t>(disc[1])],
                                                  z[static_cast<size_t>(disc[1])]);
        for (int a = 0; a < m; ++a) {
            u[static_cast<size_t>(disc[0])] = lo0 + (hi0 - lo0) * gx[static_cast<size_t>(a)];
            for (int b = 0; b < m; ++b) {
                u[static_cast<size_t>(disc[1])] = lo1 + (hi1 - lo1) * gx[static_cast<size_t>(b)];
                integral += gw[static_cast<size_t>(a)] * gw[static_cast<size_t>(b)] * (hi0 - lo0) *
                            (hi1 - lo1) * std::exp(copula.logpdf(u));
            }
        }
    }
    return ll + std::log(integral);
}

double log_propensity(const DgpSpec& spec, std::span<const double> z, double t) {
    double p = spec.propensity(z);
    return t == 1.0 ? std::log(p) : std::log(1.0 - p);
}

namespace {

stats::SymMatrix r4_matrix() {
    const double vals[5][5] = {{1.0, 0.5, 0.3, 0.1, 0.8},
                               {0.5, 1.0, 0.4, 0.1, 0.8},
                               {0.3, 0.4, 1.0, 0.1, 0.8},
                               {0.1, 0.1, 0.1, 1.0, 0.8},
                               {0.8, 0.8, 0.8, 0.8, 1.0}};
    stats::SymMatrix r(5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) r.at(i, j) = vals[i][j];
    return r;
}

stats::SymMatrix r10_matrix() {
    const double vals[11][11] = {
        {1.0, 0.3, 0.4, 0.5, 0.1, 0.2, 0.7, 0.5, 0.4, 0.5, 0.5},
        {0.3, 1.0, 0.3, 0.6, 0.3, 0.4, 0.4, 0.6, 0.3, 0.2, 0.5},
        {0.4, 0.3, 1.0, 0.5, 0.2, 0.1, 0.1, 0.0, 0.4, 0.4, 0.5},
        {0.5, 0.6, 0.5, 1.0, 0.2, 0.2, 0.5, 0.5, 0.3, 0.4, 0.5},
        {0.1, 0.3, 0.2, 0.2, 1.0, 0.1, 0.5, 0.6, 0.2, 0.4, 0.5},
        {0.2, 0.4, 0.1, 0.2, 0.1, 1.0, 0.0, 0.4, 0.2, 0.5, 0.5},
        {0.7, 0.4, 0.1, 0.5, 0.5, 0.0, 1.0, 0.4, 0.4, 0.4, 0.5},
        {0.5, 0.6, 0.0, 0.5, 0.6, 0.4, 0.4, 1.0, 0.4, 0.4, 0.5},
        {0.4, 0.3, 0.4, 0.3, 0.2, 0.2, 0.4, 0.4, 1.0, 0.4, 0.5},
        {0.5, 0.2, 0.4, 0.4, 0.2, 0.5, 0.4, 0.4, 0.4, 1.0, 0.5},
        {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0}};
    stats::SymMatrix r(11);
    // symmetrised by averaging; the source table is asymmetric in one pair
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) r.at(i, j) = 0.5 * (vals[i][j] + vals[j][i]);
    return r;
}

}  // namespace

DgpSpec DgpSpec::m1(double ate) {
    DgpSpec s;
    s.z_margins.assign(4, Margin{Margin::Kind::Gamma, 1.0, 1.0, 0.5});
    s.spearman = r4_matrix();
    s.ate = ate;
    s.intercept = 1.0;
    s.sigma = 1.0;
    s.prop_intercept = -0.3;
    s.prop_coefs = {0.1, 0.2, -0.2, 1.0};
    s.prop_interactions = {{0, 1, 0.5}};
    return s;
}

DgpSpec DgpSpec::m2(double ate) {
    DgpSpec s = m1(ate);
    s.z_margins[2] = Margin{Margin::Kind::Bernoulli, 1.0, 1.0, 0.5};
    s.z_margins[3] = Margin{Margin::Kind::Bernoulli, 1.0, 1.0, 0.5};
    return s;
}

DgpSpec DgpSpec::m3(double ate) {
    DgpSpec s;
    s.z_margins.assign(5, Margin{Margin::Kind::Gamma, 1.0, 1.0, 0.5});
    for (int i = 0; i < 5; ++i) s.z_margins.push_back(Margin{Margin::Kind::Bernoulli, 1.0, 1.0, 0.5});
    s.spearman = r10_matrix();
    s.ate = ate;
    s.intercept = 1.0;
    s.sigma = 1.0;
    s.prop_intercept = -0.3;
    s.prop_coefs = {0.1, 0.2, 0.5, -0.2, 1.0, 0.3, -0.4, 0.7, -0.1, 0.9};
    return s;
}

DgpSpec DgpSpec::by_name(const std::string& name, double ate) {
    if (name == "m1") return m1(ate);
    if (name == "m2") return m2(ate);
    if (name == "m3") return m3(ate);
    throw ValidationError("unknown dgp spec '" + name + "' (expected m1, m2 or m3)");
}

}  // namespace ff::dgp
