#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "ff/benchmark.hpp"
#include "ff/commands.hpp"
#include "ff/dgp.hpp"
#include "ff/errors.hpp"
#include "ff/estimators.hpp"
#include "ff/frugal.hpp"
#include "ff/model_io.hpp"
#include "ff/stats.hpp"

namespace py = pybind11;
using namespace ff;

namespace {

Tensor tensor_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw ValidationError("expected a 2-d array");
    Tensor t(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::memcpy(t.v.data(), arr.data(), t.v.size() * sizeof(double));
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    py::array_t<double> arr({t.rows, t.cols});
    std::memcpy(arr.mutable_data(), t.v.data(), t.v.size() * sizeof(double));
    return arr;
}

std::vector<double> vec_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 1) throw ValidationError("expected a 1-d array");
    return std::vector<double>(arr.data(), arr.data() + arr.shape(0));
}

Schema schema_from_kinds(int d, const std::vector<std::string>& kinds) {
    if (static_cast<int>(kinds.size()) != d) throw ValidationError("one covariate kind per column required");
    Schema s;
    for (int j = 0; j < d; ++j) {
        SchemaCol c;
        c.name = "z" + std::to_string(j + 1);
        c.role = Role::Covariate;
        if (kinds[static_cast<size_t>(j)] == "continuous")
            c.kind = ColKind::Continuous;
        else if (kinds[static_cast<size_t>(j)] == "discrete")
            c.kind = ColKind::Discrete;
        else
            throw ValidationError("covariate kind must be continuous or discrete");
        s.cols.push_back(c);
    }
    s.cols.push_back({"t", Role::Treatment, ColKind::Discrete});
    s.cols.push_back({"y", Role::Outcome, ColKind::Continuous});
    return s;
}

TrainConfig train_config_from_kwargs(double learning_rate, int max_epochs, int patience, int knots,
                                     int flow_layers, int hidden_width, int hidden_depth, uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.knots = knots;
    cfg.flow_layers = flow_layers;
    cfg.hidden_width = hidden_width;
    cfg.hidden_depth = hidden_depth;
    cfg.seed = seed;
    return cfg;
}

// Python-facing wrapper owning both fitted models.
class PyFrugalFit {
public:
    io::ModelBundle bundle;

    double estimated_ate() const { return bundle.frugal.estimated_ate(); }

    py::dict generate(int64_t n, uint64_t seed, double rho, const std::string& margin, double ate,
                      double intercept, double sigma, double beta, double c, const std::string& propensity,
                      double randomized_p) {
        gen::BenchmarkSpec spec;
        spec.n = n;
        spec.seed = seed;
        spec.rho = rho;
        spec.margin.kind = gen::MarginSpec::kind_from_string(margin);
        spec.margin.ate = ate;
        spec.margin.intercept = intercept;
        spec.margin.sigma = sigma;
        spec.margin.beta = beta;
        spec.margin.c = c;
        if (propensity == "learned")
            spec.propensity.kind = gen::PropensitySpec::Kind::Learned;
        else if (propensity == "randomized") {
            spec.propensity.kind = gen::PropensitySpec::Kind::Randomized;
            spec.propensity.randomized_p = randomized_p;
        } else {
            throw ValidationError("propensity must be learned or randomized");
        }
        auto res = gen::generate_benchmark(bundle.frugal, bundle.propensity, spec);
        py::dict out;
        out["z"] = array_from_tensor(res.data.z);
        out["t"] = py::array_t<double>(static_cast<py::ssize_t>(res.data.t.size()), res.data.t.data());
        out["y"] = py::array_t<double>(static_cast<py::ssize_t>(res.data.y.size()), res.data.y.data());
        out["v_y"] = py::array_t<double>(static_cast<py::ssize_t>(res.v_y.size()), res.v_y.data());
        return out;
    }

    py::array_t<double> implied_propensity(
        py::array_t<double, py::array::c_style | py::array::forcecast> z) {
        auto ps = bundle.propensity.implied_propensity(tensor_from_array(z));
        return py::array_t<double>(static_cast<py::ssize_t>(ps.size()), ps.data());
    }

    py::array_t<double> causal_margin_ranks(
        py::array_t<double, py::array::c_style | py::array::forcecast> y,
        py::array_t<double, py::array::c_style | py::array::forcecast> t) {
        auto v = bundle.frugal.causal_margin_ranks(vec_from_array(y), vec_from_array(t));
        return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
    }

    void save(const std::string& path) const { io::save_models(path, bundle); }
    static PyFrugalFit load(const std::string& path) { return PyFrugalFit{io::load_models(path)}; }
};

PyFrugalFit fit_frugal(py::array_t<double, py::array::c_style | py::array::forcecast> z,
                       py::array_t<double, py::array::c_style | py::array::forcecast> t,
                       py::array_t<double, py::array::c_style | py::array::forcecast> y,
                       const std::vector<std::string>& kinds, const std::string& margin_variant,
                       double learning_rate, int max_epochs, int patience, int knots, int flow_layers,
                       int hidden_width, int hidden_depth, uint64_t seed) {
    Dataset ds;
    ds.z = tensor_from_array(z);
    ds.t = vec_from_array(t);
    ds.y = vec_from_array(y);
    ds.schema = schema_from_kinds(ds.z.cols, kinds);
    TrainConfig cfg = train_config_from_kwargs(learning_rate, max_epochs, patience, knots, flow_layers,
                                               hidden_width, hidden_depth, seed);
    PyFrugalFit fit;
    fit.bundle.frugal = frugal::fit_frugal_flow(ds, frugal::margin_variant_from_string(margin_variant), cfg);
    TrainConfig ptc = cfg;
    ptc.seed = Rng::derive_seed(cfg.seed, "propensity");
    fit.bundle.propensity = prop::PropensityFlowModel::fit(ds.t, ds.z, ptc, ptc.seed);
    return fit;
}

py::dict simulate_dgp_py(const std::string& name, double ate, int64_t n, uint64_t seed) {
    auto sample = dgp::simulate_dgp(dgp::DgpSpec::by_name(name, ate), n, seed);
    py::dict out;
    out["z"] = array_from_tensor(sample.data.z);
    out["t"] = py::array_t<double>(static_cast<py::ssize_t>(sample.data.t.size()), sample.data.t.data());
    out["y"] = py::array_t<double>(static_cast<py::ssize_t>(sample.data.y.size()), sample.data.y.data());
    out["v_y"] = py::array_t<double>(static_cast<py::ssize_t>(sample.v_y.size()), sample.v_y.data());
    out["true_ate"] = sample.true_ate;
    std::vector<std::string> kinds;
    for (const auto& m : dgp::DgpSpec::by_name(name, ate).z_margins)
        kinds.push_back(m.kind == dgp::DgpSpec::Margin::Kind::Gamma ? "continuous" : "discrete");
    out["kinds"] = kinds;
    return out;
}

py::dict estimate_ates(py::array_t<double, py::array::c_style | py::array::forcecast> z,
                       py::array_t<double, py::array::c_style | py::array::forcecast> t,
                       py::array_t<double, py::array::c_style | py::array::forcecast> y) {
    Dataset ds;
    ds.z = tensor_from_array(z);
    ds.t = vec_from_array(t);
    ds.y = vec_from_array(y);
    ds.schema = schema_from_kinds(ds.z.cols, std::vector<std::string>(static_cast<size_t>(ds.z.cols), "continuous"));
    auto dom = est::difference_of_means(ds);
    auto orr = est::outcome_regression_ate(ds);
    py::dict out;
    out["dom"] = dom.point;
    out["dom_se"] = dom.stderr_;
    out["or"] = orr.point;
    out["or_se"] = orr.stderr_;
    return out;
}

}  // namespace

PYBIND11_MODULE(_frugalflows, m) {
    m.doc() = "Frugal flow models: causal-margin flows, copula flows, benchmark generation";

    py::register_exception<ValidationError>(m, "FlowValidationError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "FlowNumericError", PyExc_ArithmeticError);
    py::register_exception<TrainingError>(m, "FlowTrainingError", PyExc_RuntimeError);

    py::class_<PyFrugalFit>(m, "FrugalFit")
        .def_property_readonly("estimated_ate", &PyFrugalFit::estimated_ate)
        .def("generate", &PyFrugalFit::generate, py::arg("n"), py::arg("seed") = 0, py::arg("rho") = 0.0,
             py::arg("margin") = "gaussian", py::arg("ate") = 0.0, py::arg("intercept") = 0.0,
             py::arg("sigma") = 1.0, py::arg("beta") = 0.0, py::arg("c") = 0.0,
             py::arg("propensity") = "learned", py::arg("randomized_p") = 0.5)
        .def("implied_propensity", &PyFrugalFit::implied_propensity, py::arg("z"))
        .def("causal_margin_ranks", &PyFrugalFit::causal_margin_ranks, py::arg("y"), py::arg("t"))
        .def("save", &PyFrugalFit::save, py::arg("path"))
        .def_static("load", &PyFrugalFit::load, py::arg("path"));

    m.def("fit_frugal_flow", &fit_frugal, py::arg("z"), py::arg("t"), py::arg("y"), py::arg("kinds"),
          py::arg("margin_variant") = "gaussian", py::arg("learning_rate") = 5e-3,
          py::arg("max_epochs") = 800, py::arg("patience") = 100, py::arg("knots") = 8,
          py::arg("flow_layers") = 5, py::arg("hidden_width") = 50, py::arg("hidden_depth") = 4,
          py::arg("seed") = 0,
          "Jointly fit the causal margin and covariate copula, plus the propensity flow.");

    m.def("simulate_dgp", &simulate_dgp_py, py::arg("name"), py::arg("ate") = 1.0, py::arg("n") = 10000,
          py::arg("seed") = 0, "Simulate one of the built-in ground-truth processes (m1, m2, m3).");

    m.def("estimate_ates", &estimate_ates, py::arg("z"), py::arg("t"), py::arg("y"),
          "Difference-of-means and linear outcome-regression estimates with standard errors.");

    m.def("gaussian_copula_pair", [](double rho, int64_t n, uint64_t seed) {
        auto [u1, u2] = gen::gaussian_copula_pair(rho, n, seed);
        return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(u1.size()), u1.data()),
                              py::array_t<double>(static_cast<py::ssize_t>(u2.size()), u2.data()));
    }, py::arg("rho"), py::arg("n"), py::arg("seed") = 0);

    m.def("ks_uniform", [](py::array_t<double, py::array::c_style | py::array::forcecast> xs) {
        return stats::ks_uniform_statistic(vec_from_array(xs));
    }, py::arg("xs"));

    m.def("spearman_to_pearson", &stats::spearman_to_pearson, py::arg("rs"));
}
