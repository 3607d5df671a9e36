#include "ff/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ff/errors.hpp"

namespace ff::io {

namespace {

constexpr char kMagic[4] = {'F', 'F', 'M', 'B'};

class Writer {
public:
    void u32(uint32_t x) { raw(&x, sizeof x); }
    void u64(uint64_t x) { raw(&x, sizeof x); }
    void i32(int32_t x) { raw(&x, sizeof x); }
    void f64(double x) { raw(&x, sizeof x); }
    void b(bool x) { u32(x ? 1 : 0); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void f64s(const std::vector<double>& xs) {
        u64(xs.size());
        raw(xs.data(), xs.size() * sizeof(double));
    }
    void i32s(const std::vector<int>& xs) {
        u64(xs.size());
        for (int x : xs) i32(x);
    }
    void tensor(const Tensor& t) {
        i32(t.rows);
        i32(t.cols);
        f64s(t.v);
    }
    std::string take() { return std::move(buf_); }

private:
    void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : buf_(bytes) {}
    uint32_t u32() { return take<uint32_t>(); }
    uint64_t u64() { return take<uint64_t>(); }
    int32_t i32() { return take<int32_t>(); }
    double f64() { return take<double>(); }
    bool b() { return u32() != 0; }
    std::string str() {
        size_t n = u64();
        check(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::vector<double> f64s() {
        size_t n = u64();
        check(n * sizeof(double));
        std::vector<double> xs(n);
        std::memcpy(xs.data(), buf_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return xs;
    }
    std::vector<int> i32s() {
        size_t n = u64();
        std::vector<int> xs(n);
        for (auto& x : xs) x = i32();
        return xs;
    }
    Tensor tensor() {
        Tensor t;
        t.rows = i32();
        t.cols = i32();
        t.v = f64s();
        if (t.v.size() != static_cast<size_t>(t.rows) * static_cast<size_t>(t.cols))
            throw ValidationError("model file: tensor size mismatch");
        return t;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    template <typename T>
    T take() {
        check(sizeof(T));
        T x;
        std::memcpy(&x, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return x;
    }
    void check(size_t n) const {
        if (pos_ + n > buf_.size()) throw ValidationError("model file: truncated");
    }
    const std::string& buf_;
    size_t pos_ = 0;
};

void write_schema(Writer& w, const Schema& s) {
    w.u64(s.cols.size());
    for (const auto& c : s.cols) {
        w.str(c.name);
        w.u32(static_cast<uint32_t>(c.role));
        w.u32(static_cast<uint32_t>(c.kind));
    }
}

Schema read_schema(Reader& r) {
    Schema s;
    size_t n = r.u64();
    for (size_t i = 0; i < n; ++i) {
        SchemaCol c;
        c.name = r.str();
        c.role = static_cast<Role>(r.u32());
        c.kind = static_cast<ColKind>(r.u32());
        s.cols.push_back(c);
    }
    return s;
}

void write_spline(Writer& w, const bij::RqsSpline& s) {
    w.f64(s.bound);
    w.f64s(s.x_knots);
    w.f64s(s.y_knots);
    w.f64s(s.derivs);
}

bij::RqsSpline read_spline(Reader& r) {
    bij::RqsSpline s;
    s.bound = r.f64();
    s.x_knots = r.f64s();
    s.y_knots = r.f64s();
    s.derivs = r.f64s();
    s.validate();
    return s;
}

void write_chain(Writer& w, const bij::Chain& c) {
    w.u64(c.parts.size());
    for (const auto& p : c.parts) {
        w.u32(static_cast<uint32_t>(p.kind));
        w.f64(p.scale);
        w.f64(p.shift);
        w.f64(p.domain.lo);
        w.f64(p.domain.hi);
        w.f64(p.codomain.lo);
        w.f64(p.codomain.hi);
        if (p.kind == bij::Kind::Rqs) write_spline(w, p.spline);
    }
}

bij::Chain read_chain(Reader& r) {
    std::vector<bij::Univariate> parts;
    size_t n = r.u64();
    for (size_t i = 0; i < n; ++i) {
        bij::Univariate p;
        p.kind = static_cast<bij::Kind>(r.u32());
        p.scale = r.f64();
        p.shift = r.f64();
        p.domain.lo = r.f64();
        p.domain.hi = r.f64();
        p.codomain.lo = r.f64();
        p.codomain.hi = r.f64();
        if (p.kind == bij::Kind::Rqs) p.spline = read_spline(r);
        parts.push_back(std::move(p));
    }
    return bij::compose(std::move(parts));
}

void write_stepcdf(Writer& w, const marg::StepCdf& c) {
    w.f64s(c.values);
    w.f64s(c.cum);
}

marg::StepCdf read_stepcdf(Reader& r) {
    marg::StepCdf c;
    c.values = r.f64s();
    c.cum = r.f64s();
    if (c.values.size() != c.cum.size() || c.values.empty())
        throw ValidationError("model file: malformed step cdf");
    return c;
}

void write_mlp_weights(Writer& w, const diff::MaskedMlp& mlp) {
    w.u64(mlp.layers().size());
    for (const auto& l : mlp.layers()) {
        w.tensor(l.weight.value);
        w.tensor(l.bias.value);
    }
}

void read_mlp_weights(Reader& r, diff::MaskedMlp& mlp) {
    size_t n = r.u64();
    if (n != mlp.layers().size()) throw ValidationError("model file: conditioner layer count mismatch");
    for (auto& l : mlp.layers()) {
        Tensor wv = r.tensor();
        Tensor bv = r.tensor();
        if (!wv.same_shape(l.weight.value) || !bv.same_shape(l.bias.value))
            throw ValidationError("model file: conditioner weight shape mismatch");
        l.weight.value = std::move(wv);
        l.bias.value = std::move(bv);
    }
}

void write_train_config(Writer& w, const TrainConfig& c) {
    w.f64(c.learning_rate);
    w.i32(c.max_epochs);
    w.i32(c.patience);
    w.f64(c.train_fraction);
    w.i32(c.batch_size);
    w.i32(c.knots);
    w.i32(c.flow_layers);
    w.i32(c.hidden_width);
    w.i32(c.hidden_depth);
    w.b(c.resample_dequant_per_epoch);
    w.u64(c.seed);
}

TrainConfig read_train_config(Reader& r) {
    TrainConfig c;
    c.learning_rate = r.f64();
    c.max_epochs = r.i32();
    c.patience = r.i32();
    c.train_fraction = r.f64();
    c.batch_size = r.i32();
    c.knots = r.i32();
    c.flow_layers = r.i32();
    c.hidden_width = r.i32();
    c.hidden_depth = r.i32();
    c.resample_dequant_per_epoch = r.b();
    c.seed = r.u64();
    return c;
}

void write_copula(Writer& w, const copula::CopulaFlow& flow) {
    const auto& c = flow.config();
    w.i32(c.dim);
    w.i32s(c.degrees);
    std::vector<int> ident(c.identity.begin(), c.identity.end());
    w.i32s(ident);
    w.i32s(c.perm_block);
    w.i32(c.subflows);
    w.i32(c.knots);
    w.i32(c.hidden_width);
    w.i32(c.hidden_depth);
    w.f64(c.min_bin);
    w.f64(c.min_deriv);
    w.u64(flow.permutations().size());
    for (const auto& p : flow.permutations()) w.i32s(p);
    for (const auto& mlp : flow.conditioners()) write_mlp_weights(w, mlp);
}

copula::CopulaFlow read_copula(Reader& r) {
    copula::CopulaFlowConfig c;
    c.dim = r.i32();
    c.degrees = r.i32s();
    auto ident = r.i32s();
    c.identity.assign(ident.begin(), ident.end());
    c.perm_block = r.i32s();
    c.subflows = r.i32();
    c.knots = r.i32();
    c.hidden_width = r.i32();
    c.hidden_depth = r.i32();
    c.min_bin = r.f64();
    c.min_deriv = r.f64();
    copula::CopulaFlow flow = copula::CopulaFlow::from_config(c, 0);
    size_t nperm = r.u64();
    std::vector<std::vector<int>> perms;
    for (size_t i = 0; i < nperm; ++i) perms.push_back(r.i32s());
    flow.set_permutations(std::move(perms));
    for (auto& mlp : flow.conditioners()) read_mlp_weights(r, mlp);
    return flow;
}

void write_frugal(Writer& w, const frugal::FrugalFlowModel& m) {
    write_schema(w, m.schema);
    w.u32(static_cast<uint32_t>(m.variant));
    w.f64(m.gaussian.intercept);
    w.f64(m.gaussian.t_coef);
    w.f64(m.gaussian.log_sigma);
    w.f64s(m.gaussian.w_coef);
    w.f64s(m.gaussian.tw_coef);
    w.f64(m.nsf.whiten_mean);
    w.f64(m.nsf.whiten_sd);
    w.f64(m.nsf.ate_shift);
    w.u64(m.nsf.layers.size());
    for (const auto& s : m.nsf.layers) write_spline(w, s);
    write_copula(w, m.copula_flow);
    w.u64(m.handlers.size());
    for (const auto& h : m.handlers) {
        w.b(h.discrete);
        if (h.discrete)
            write_stepcdf(w, h.cdf);
        else
            write_chain(w, h.flow.chain());
    }
    w.i32s(m.w_cols);
    write_train_config(w, m.train_config);
}

frugal::FrugalFlowModel read_frugal(Reader& r) {
    frugal::FrugalFlowModel m;
    m.schema = read_schema(r);
    m.variant = static_cast<frugal::MarginVariant>(r.u32());
    m.gaussian.intercept = r.f64();
    m.gaussian.t_coef = r.f64();
    m.gaussian.log_sigma = r.f64();
    m.gaussian.w_coef = r.f64s();
    m.gaussian.tw_coef = r.f64s();
    m.nsf.whiten_mean = r.f64();
    m.nsf.whiten_sd = r.f64();
    m.nsf.ate_shift = r.f64();
    size_t nlayers = r.u64();
    for (size_t i = 0; i < nlayers; ++i) m.nsf.layers.push_back(read_spline(r));
    m.copula_flow = read_copula(r);
    size_t nh = r.u64();
    for (size_t i = 0; i < nh; ++i) {
        frugal::ColumnHandler h;
        h.discrete = r.b();
        if (h.discrete)
            h.cdf = read_stepcdf(r);
        else
            h.flow = marg::UnivariateFlow::from_chain(read_chain(r));
        m.handlers.push_back(std::move(h));
    }
    m.w_cols = r.i32s();
    m.train_config = read_train_config(r);
    return m;
}

void write_propensity(Writer& w, const prop::PropensityFlowModel& m) {
    write_stepcdf(w, m.t_cdf_);
    w.i32(m.knots_);
    w.f64(m.min_bin_);
    w.f64(m.min_deriv_);
    w.f64s(m.z_mean_);
    w.f64s(m.z_sd_);
    w.u64(m.layers_.size());
    for (const auto& mlp : m.layers_) {
        w.i32(mlp.context_dim());
        w.i32(static_cast<int32_t>(mlp.layers().size()) - 1);  // hidden depth
        w.i32(mlp.layers().empty() ? 0 : mlp.layers().front().weight.value.cols);
        write_mlp_weights(w, mlp);
    }
}

prop::PropensityFlowModel read_propensity(Reader& r) {
    prop::PropensityFlowModel m;
    m.t_cdf_ = read_stepcdf(r);
    m.knots_ = r.i32();
    m.min_bin_ = r.f64();
    m.min_deriv_ = r.f64();
    m.z_mean_ = r.f64s();
    m.z_sd_ = r.f64s();
    size_t nl = r.u64();
    const int pu = 3 * m.knots_ - 1;
    for (size_t i = 0; i < nl; ++i) {
        int ctx = r.i32();
        int depth = r.i32();
        int width = r.i32();
        diff::MaskedMlp mlp(std::vector<int>{}, ctx, std::vector<int>(static_cast<size_t>(pu), 1),
                            depth > 0 ? width : 1, depth);
        read_mlp_weights(r, mlp);
        m.layers_.push_back(std::move(mlp));
    }
    return m;
}

}  // namespace

std::string serialize_models(const ModelBundle& bundle) {
    Writer w;
    w.u32(kModelFormatVersion);
    write_frugal(w, bundle.frugal);
    write_propensity(w, bundle.propensity);
    std::string payload = w.take();
    std::string out(kMagic, sizeof kMagic);
    out += payload;
    return out;
}

ModelBundle deserialize_models(const std::string& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw ValidationError("model file: bad magic, not a model bundle");
    std::string payload = bytes.substr(4);
    Reader r(payload);
    uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw ValidationError("model file: format version " + std::to_string(version) +
                              " unsupported (expected " + std::to_string(kModelFormatVersion) + ")");
    ModelBundle b;
    b.frugal = read_frugal(r);
    b.propensity = read_propensity(r);
    return b;
}

void save_models(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file '" + path + "'");
    std::string bytes = serialize_models(bundle);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

ModelBundle load_models(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_models(ss.str());
}

uint64_t model_fingerprint(const ModelBundle& bundle) {
    std::string bytes = serialize_models(bundle);
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

void save_copula_flow(const std::string& path, const copula::CopulaFlow& flow) {
    Writer w;
    w.u32(kModelFormatVersion);
    write_copula(w, flow);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write copula file '" + path + "'");
    std::string bytes = "FFCP" + w.take();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

copula::CopulaFlow load_copula_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open copula file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    if (bytes.size() < 8 || bytes.substr(0, 4) != "FFCP")
        throw ValidationError("copula file: bad magic");
    std::string payload = bytes.substr(4);
    Reader r(payload);
    if (r.u32() != kModelFormatVersion) throw ValidationError("copula file: unsupported version");
    return read_copula(r);
}

}  // namespace ff::io
