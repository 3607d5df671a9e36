#include "ff/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ff/csv.hpp"
#include "ff/errors.hpp"
#include "ff/estimators.hpp"
#include "ff/frugal.hpp"
#include "ff/model_io.hpp"
#include "ff/stats.hpp"

namespace ff::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<double> split_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) {
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ValidationError(what + ": cannot parse number '" + tok + "'");
        }
    }
    return out;
}

}  // namespace

Schema schema_from_config(const io::Config& cfg) {
    if (!cfg.has_section("schema")) throw ValidationError("config: missing [schema] section");
    Schema schema;
    for (const auto& [name, value] : cfg.items("schema")) {
        SchemaCol col;
        col.name = name;
        auto toks = split_ws(value);
        if (toks.empty()) throw ValidationError("schema column '" + name + "': empty role");
        const std::string& role = toks[0];
        if (role == "covariate") {
            col.role = Role::Covariate;
            if (toks.size() < 2 || (toks[1] != "continuous" && toks[1] != "discrete"))
                throw ValidationError("schema column '" + name + "': covariate needs continuous|discrete");
            col.kind = toks[1] == "discrete" ? ColKind::Discrete : ColKind::Continuous;
        } else if (role == "treatment") {
            col.role = Role::Treatment;
            col.kind = ColKind::Discrete;
        } else if (role == "outcome") {
            col.role = Role::Outcome;
            col.kind = ColKind::Continuous;
        } else {
            throw ValidationError("schema column '" + name + "': unknown role '" + role + "'");
        }
        schema.cols.push_back(col);
    }
    schema.validate();
    return schema;
}

TrainConfig train_config_from_config(const io::Config& cfg, std::optional<uint64_t> seed_override) {
    TrainConfig tc;
    tc.learning_rate = cfg.get_double_or("train", "learning_rate", tc.learning_rate);
    tc.max_epochs = static_cast<int>(cfg.get_int_or("train", "max_epochs", tc.max_epochs));
    tc.patience = static_cast<int>(cfg.get_int_or("train", "patience", tc.patience));
    tc.train_fraction = cfg.get_double_or("train", "train_fraction", tc.train_fraction);
    tc.batch_size = static_cast<int>(cfg.get_int_or("train", "batch_size", tc.batch_size));
    tc.knots = static_cast<int>(cfg.get_int_or("train", "knots", tc.knots));
    tc.flow_layers = static_cast<int>(cfg.get_int_or("train", "flow_layers", tc.flow_layers));
    tc.hidden_width = static_cast<int>(cfg.get_int_or("train", "hidden_width", tc.hidden_width));
    tc.hidden_depth = static_cast<int>(cfg.get_int_or("train", "hidden_depth", tc.hidden_depth));
    tc.resample_dequant_per_epoch = cfg.get_bool_or("train", "resample_dequant", false);
    tc.seed = static_cast<uint64_t>(cfg.get_int_or("train", "seed", 0));
    if (seed_override) tc.seed = *seed_override;
    tc.validate();
    return tc;
}

dgp::DgpSpec dgp_spec_from_config(const io::Config& cfg) {
    if (!cfg.has_section("dgp")) throw ValidationError("config: missing [dgp] section");
    dgp::DgpSpec spec;
    if (cfg.has("dgp", "name")) {
        spec = dgp::DgpSpec::by_name(cfg.get("dgp", "name"), cfg.get_double_or("dgp", "ate", 1.0));
    } else {
        auto margins = split_list(cfg.get("dgp", "margins"));
        for (const auto& m : margins) {
            dgp::DgpSpec::Margin margin;
            if (m == "gamma") {
                margin.kind = dgp::DgpSpec::Margin::Kind::Gamma;
            } else if (m == "bernoulli") {
                margin.kind = dgp::DgpSpec::Margin::Kind::Bernoulli;
            } else {
                throw ValidationError("dgp margins: unknown '" + m + "'");
            }
            spec.z_margins.push_back(margin);
        }
        const int d = spec.dim();
        spec.spearman = stats::SymMatrix(d + 1);
        for (int i = 0; i <= d; ++i) {
            auto row = split_doubles(cfg.get("dgp", "spearman_row_" + std::to_string(i + 1)), "dgp spearman");
            if (static_cast<int>(row.size()) != d + 1)
                throw ValidationError("dgp spearman_row_" + std::to_string(i + 1) + ": wrong length");
            for (int j = 0; j <= d; ++j) spec.spearman.at(i, j) = row[static_cast<size_t>(j)];
        }
        spec.ate = cfg.get_double_or("dgp", "ate", 1.0);
        spec.prop_coefs = split_doubles(cfg.get("dgp", "prop_coefs"), "dgp prop_coefs");
        spec.prop_intercept = cfg.get_double_or("dgp", "prop_intercept", 0.0);
        if (cfg.has("dgp", "prop_interactions")) {
            // entries like 1*2:0.5, 1-based column indices
            for (const auto& tok : split_list(cfg.get("dgp", "prop_interactions"))) {
                size_t star = tok.find('*'), colon = tok.find(':');
                if (star == std::string::npos || colon == std::string::npos || colon < star)
                    throw ValidationError("dgp prop_interactions: expected i*j:coef, got '" + tok + "'");
                int i = std::stoi(tok.substr(0, star)) - 1;
                int j = std::stoi(tok.substr(star + 1, colon - star - 1)) - 1;
                double c = std::stod(tok.substr(colon + 1));
                spec.prop_interactions.emplace_back(i, j, c);
            }
        }
    }
    spec.intercept = cfg.get_double_or("dgp", "intercept", spec.intercept);
    spec.sigma = cfg.get_double_or("dgp", "sigma", spec.sigma);
    spec.validate();
    return spec;
}

gen::BenchmarkSpec benchmark_spec_from_config(const io::Config& cfg, std::optional<uint64_t> seed_override) {
    if (!cfg.has_section("benchmark")) throw ValidationError("config: missing [benchmark] section");
    gen::BenchmarkSpec spec;
    spec.n = cfg.get_int("benchmark", "n");
    spec.seed = static_cast<uint64_t>(cfg.get_int_or("benchmark", "seed", 0));
    if (seed_override) spec.seed = *seed_override;
    spec.rho = cfg.get_double_or("benchmark", "rho", 0.0);

    const std::string margin = cfg.get_or("benchmark", "margin", "gaussian");
    spec.margin.kind = gen::MarginSpec::kind_from_string(margin);
    spec.margin.ate = cfg.get_double_or("benchmark", "ate", 0.0);
    spec.margin.intercept = cfg.get_double_or("benchmark", "intercept", 0.0);
    spec.margin.sigma = cfg.get_double_or("benchmark", "sigma", 1.0);
    spec.margin.beta = cfg.get_double_or("benchmark", "beta", 0.0);
    spec.margin.c = cfg.get_double_or("benchmark", "c", 0.0);

    const std::string prop = cfg.get_or("benchmark", "propensity", "learned");
    if (prop == "learned") {
        spec.propensity.kind = gen::PropensitySpec::Kind::Learned;
    } else if (prop == "randomized") {
        spec.propensity.kind = gen::PropensitySpec::Kind::Randomized;
        spec.propensity.randomized_p = cfg.get_double_or("benchmark", "randomized_p", 0.5);
    } else if (prop == "constant") {
        spec.propensity.kind = gen::PropensitySpec::Kind::Override;
        spec.propensity.override_fn.kind = prop::PropensityOverride::Kind::Constant;
        spec.propensity.override_fn.constant = cfg.get_double_or("benchmark", "override_p", 0.5);
    } else if (prop == "logistic-linear") {
        spec.propensity.kind = gen::PropensitySpec::Kind::Override;
        spec.propensity.override_fn.kind = prop::PropensityOverride::Kind::LogisticLinear;
        spec.propensity.override_fn.intercept = cfg.get_double_or("benchmark", "override_intercept", 0.0);
        spec.propensity.override_fn.coefs =
            split_doubles(cfg.get("benchmark", "override_coefs"), "benchmark override_coefs");
    } else {
        throw ValidationError("benchmark propensity: unknown '" + prop + "'");
    }

    if (cfg.has("benchmark", "hetero_ate")) {
        gen::HeteroMarginSpec h;
        h.base = cfg.get_double_or("benchmark", "hetero_base", 0.0);
        h.ate = cfg.get_double("benchmark", "hetero_ate");
        h.sigma = cfg.get_double_or("benchmark", "hetero_sigma", 1.0);
        h.w_lin = split_doubles(cfg.get("benchmark", "hetero_w_lin"), "benchmark hetero_w_lin");
        h.w_int = split_doubles(cfg.get("benchmark", "hetero_w_int"), "benchmark hetero_w_int");
        spec.heterogeneity = h;
    }
    spec.validate();
    return spec;
}

FitResult cmd_fit(const io::Config& cfg, std::optional<uint64_t> seed, const std::string& out_path) {
    if (out_path.empty()) throw ValidationError("fit: --out model path required");
    Schema schema = schema_from_config(cfg);
    const std::string data_path = cfg.get("io", "data");
    Dataset data = io::read_dataset(data_path, schema);
    TrainConfig tc = train_config_from_config(cfg, seed);

    frugal::MarginVariant variant =
        frugal::margin_variant_from_string(cfg.get_or("train", "margin_variant", "gaussian"));

    std::vector<int> w_cols;
    if (cfg.has("train", "heterogeneous_w")) {
        auto names = split_list(cfg.get("train", "heterogeneous_w"));
        auto cov_names = data.covariate_names();
        for (const auto& name : names) {
            auto it = std::find(cov_names.begin(), cov_names.end(), name);
            if (it == cov_names.end())
                throw ValidationError("heterogeneous_w: '" + name + "' is not a covariate");
            w_cols.push_back(static_cast<int>(it - cov_names.begin()));
        }
    }

    io::ModelBundle bundle;
    bundle.frugal = w_cols.empty() ? frugal::fit_frugal_flow(data, variant, tc)
                                   : frugal::fit_heterogeneous_frugal_flow(data, w_cols, tc);
    TrainConfig ptc = tc;
    ptc.seed = Rng::derive_seed(tc.seed, "propensity");
    bundle.propensity = prop::PropensityFlowModel::fit(data.t, data.z, ptc, ptc.seed);

    io::save_models(out_path, bundle);

    FitResult res;
    res.model_path = out_path;
    res.loss_csv_path = out_path + ".loss.csv";
    const auto& diag = bundle.frugal.diagnostics;
    Tensor losses(static_cast<int>(diag.train_loss.size()), 3);
    for (size_t e = 0; e < diag.train_loss.size(); ++e) {
        losses(static_cast<int>(e), 0) = static_cast<double>(e);
        losses(static_cast<int>(e), 1) = diag.train_loss[e];
        losses(static_cast<int>(e), 2) = diag.val_loss[e];
    }
    io::write_csv(res.loss_csv_path, {"epoch", "train_loss", "val_loss"}, losses);
    if (!bundle.frugal.heterogeneous() && variant != frugal::MarginVariant::NsfUnconditional) {
        res.estimated_ate = bundle.frugal.estimated_ate();
        res.has_ate = true;
    }
    return res;
}

namespace {

void write_sidecar(const std::string& path, const gen::BenchmarkSpec& spec, uint64_t fingerprint,
                   const std::string& model_path) {
    io::Config meta;
    meta.set_int("meta", "format_version", 1);
    meta.set("meta", "kind", "benchmark-sidecar");
    meta.set("meta", "model", model_path);
    meta.set("meta", "model_fingerprint", std::to_string(fingerprint));
    meta.set_int("benchmark", "n", spec.n);
    meta.set_int("benchmark", "seed", static_cast<int64_t>(spec.seed));
    meta.set_double("benchmark", "rho", spec.rho);
    meta.set("benchmark", "margin", gen::MarginSpec::to_string(spec.margin.kind));
    meta.set_double("benchmark", "ate", spec.margin.ate);
    meta.set_double("benchmark", "intercept", spec.margin.intercept);
    meta.set_double("benchmark", "sigma", spec.margin.sigma);
    meta.set_double("benchmark", "beta", spec.margin.beta);
    meta.set_double("benchmark", "c", spec.margin.c);
    switch (spec.propensity.kind) {
        case gen::PropensitySpec::Kind::Learned: meta.set("benchmark", "propensity", "learned"); break;
        case gen::PropensitySpec::Kind::Randomized:
            meta.set("benchmark", "propensity", "randomized");
            meta.set_double("benchmark", "randomized_p", spec.propensity.randomized_p);
            break;
        case gen::PropensitySpec::Kind::Override:
            if (spec.propensity.override_fn.kind == prop::PropensityOverride::Kind::Constant) {
                meta.set("benchmark", "propensity", "constant");
                meta.set_double("benchmark", "override_p", spec.propensity.override_fn.constant);
            } else {
                meta.set("benchmark", "propensity", "logistic-linear");
                meta.set_double("benchmark", "override_intercept", spec.propensity.override_fn.intercept);
                std::ostringstream coefs;
                for (size_t i = 0; i < spec.propensity.override_fn.coefs.size(); ++i)
                    coefs << (i ? "," : "") << spec.propensity.override_fn.coefs[i];
                meta.set("benchmark", "override_coefs", coefs.str());
            }
            break;
    }
    if (spec.heterogeneity) {
        const auto& h = *spec.heterogeneity;
        meta.set_double("benchmark", "hetero_base", h.base);
        meta.set_double("benchmark", "hetero_ate", h.ate);
        meta.set_double("benchmark", "hetero_sigma", h.sigma);
        std::ostringstream lin, inter;
        for (size_t i = 0; i < h.w_lin.size(); ++i) lin << (i ? "," : "") << h.w_lin[i];
        for (size_t i = 0; i < h.w_int.size(); ++i) inter << (i ? "," : "") << h.w_int[i];
        meta.set("benchmark", "hetero_w_lin", lin.str());
        meta.set("benchmark", "hetero_w_int", inter.str());
    }
    meta.write_file(path);
}

}  // namespace

GenerateResult cmd_generate(const io::Config& cfg, std::optional<uint64_t> seed, const std::string& out_path) {
    if (out_path.empty()) throw ValidationError("generate: --out dataset path required");
    const std::string model_path = cfg.get("io", "model");
    io::ModelBundle bundle = io::load_models(model_path);
    gen::BenchmarkSpec spec = benchmark_spec_from_config(cfg, seed);
    auto result = gen::generate_benchmark(bundle.frugal, bundle.propensity, spec);
    io::write_dataset(out_path, result.data);
    GenerateResult res;
    res.data_path = out_path;
    res.sidecar_path = out_path + ".meta";
    write_sidecar(res.sidecar_path, spec, io::model_fingerprint(bundle), model_path);
    return res;
}

void cmd_evaluate(const std::vector<std::string>& csv_paths, const io::Config& cfg,
                  const std::string& out_path) {
    if (csv_paths.empty()) throw ValidationError("evaluate: no input datasets given");
    if (out_path.empty()) throw ValidationError("evaluate: --out table path required");
    Schema schema = schema_from_config(cfg);

    std::vector<std::string> header{"dataset", "method", "estimate", "stderr", "ci_lo", "ci_hi"};
    std::vector<std::array<double, 6>> rows;
    std::vector<double> dom_points, or_points;
    for (size_t f = 0; f < csv_paths.size(); ++f) {
        Dataset ds = io::read_dataset(csv_paths[f], schema);
        auto dom = est::difference_of_means(ds);
        rows.push_back({static_cast<double>(f), 0.0, dom.point, dom.stderr_, dom.point - 2 * dom.stderr_,
                        dom.point + 2 * dom.stderr_});
        dom_points.push_back(dom.point);
        auto orr = est::outcome_regression_ate(ds);
        rows.push_back({static_cast<double>(f), 1.0, orr.point, orr.stderr_, orr.point - 2 * orr.stderr_,
                        orr.point + 2 * orr.stderr_});
        or_points.push_back(orr.point);
        bool binary_y = true;
        for (double yv : ds.y) binary_y &= (yv == 0.0 || yv == 1.0);
        if (binary_y) {
            auto ipw = est::ipw_logistic(ds);
            rows.push_back({static_cast<double>(f), 2.0, ipw.slope, ipw.slope_se,
                            ipw.slope - 2 * ipw.slope_se, ipw.slope + 2 * ipw.slope_se});
        }
    }
    auto pooled = [&](const std::vector<double>& xs) {
        double m = stats::mean(xs);
        double sd = xs.size() > 1 ? std::sqrt(stats::variance(xs) / static_cast<double>(xs.size())) : 0.0;
        return std::pair<double, double>{m, sd};
    };
    auto [dm, ds_] = pooled(dom_points);
    rows.push_back({-1.0, 0.0, dm, ds_, dm - 2 * ds_, dm + 2 * ds_});
    auto [om, os] = pooled(or_points);
    rows.push_back({-1.0, 1.0, om, os, om - 2 * os, om + 2 * os});

    Tensor table(static_cast<int>(rows.size()), 6);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < 6; ++j) table(static_cast<int>(i), j) = rows[i][static_cast<size_t>(j)];
    io::write_csv(out_path, header, table);
}

DiagnoseResult cmd_diagnose(const std::string& real_csv, const std::string& synth_csv,
                            const io::Config& cfg, const std::string& out_path) {
    Schema schema = schema_from_config(cfg);
    Dataset real = io::read_dataset(real_csv, schema);
    Dataset synth = io::read_dataset(synth_csv, schema);

    auto corr_matrix = [](const Dataset& ds) {
        const int d = ds.z.cols + 1;  // covariates plus outcome
        stats::SymMatrix m(d);
        std::vector<std::vector<double>> cols;
        for (int j = 0; j < ds.z.cols; ++j) cols.push_back(ds.z_col(j));
        cols.push_back(ds.y);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                m.at(a, b) = a == b ? 1.0 : stats::pearson(cols[static_cast<size_t>(a)], cols[static_cast<size_t>(b)]);
        return m;
    };
    stats::SymMatrix mr = corr_matrix(real), ms = corr_matrix(synth);
    double max_diff = 0.0;
    for (int a = 0; a < mr.n; ++a)
        for (int b = 0; b < mr.n; ++b) max_diff = std::max(max_diff, std::fabs(mr.at(a, b) - ms.at(a, b)));

    io::Config report;
    report.set_int("meta", "format_version", 1);
    report.set("meta", "kind", "correlation-diagnostic");
    report.set_double("summary", "max_abs_difference", max_diff);
    auto names = real.covariate_names();
    names.push_back(real.schema.cols[static_cast<size_t>(real.schema.outcome_index())].name);
    auto emit = [&](const std::string& section, const stats::SymMatrix& m) {
        for (int a = 0; a < m.n; ++a) {
            std::ostringstream row;
            for (int b = 0; b < m.n; ++b) row << (b ? "," : "") << m.at(a, b);
            report.set(section, names[static_cast<size_t>(a)], row.str());
        }
    };
    emit("real", mr);
    emit("synthetic", ms);
    if (!out_path.empty()) report.write_file(out_path);

    DiagnoseResult res;
    res.max_abs_difference = max_diff;
    return res;
}

SimulateResult cmd_simulate_dgp(const io::Config& cfg, std::optional<uint64_t> seed,
                                const std::string& out_path) {
    if (out_path.empty()) throw ValidationError("simulate-dgp: --out dataset path required");
    dgp::DgpSpec spec = dgp_spec_from_config(cfg);
    int64_t n = cfg.get_int("dgp", "n");
    uint64_t s = static_cast<uint64_t>(cfg.get_int_or("dgp", "seed", 0));
    if (seed) s = *seed;
    auto sample = dgp::simulate_dgp(spec, n, s);
    io::write_dataset(out_path, sample.data);
    SimulateResult res;
    res.data_path = out_path;
    res.true_ate = sample.true_ate;
    return res;
}

}  // namespace ff::cli
