#include "ff/tape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace ff::diff {

namespace {

std::atomic<int> g_max_threads{2};

// Split [0, n) into near-equal chunks, one worker per chunk. The chunk
// boundaries depend only on n and the thread count, and every output element
// is written by exactly one worker with a fixed accumulation order, so the
// result is bit-identical to the serial loop.
template <typename F>
void parallel_rows(int n, int64_t flops, F&& body) {
    int nt = g_max_threads.load();
    if (nt <= 1 || n < 64 || flops < (1 << 20)) {
        body(0, n);
        return;
    }
    nt = std::min<int>(nt, n);
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(nt) - 1);
    int chunk = (n + nt - 1) / nt;
    for (int t = 1; t < nt; ++t) {
        int lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(0, std::min(n, chunk));
    for (auto& w : workers) w.join();
}

// c[lo..hi) += a[lo..hi) . b
void matmul_accum(const Tensor& a, const Tensor& b, Tensor& c, int lo, int hi) {
    const int k = a.cols, m = b.cols;
    for (int i = lo; i < hi; ++i) {
        const double* arow = &a.v[static_cast<size_t>(i) * k];
        double* crow = &c.v[static_cast<size_t>(i) * m];
        int p = 0;
        for (; p + 4 <= k; p += 4) {
            const double a0 = arow[p], a1 = arow[p + 1], a2 = arow[p + 2], a3 = arow[p + 3];
            const double* b0 = &b.v[static_cast<size_t>(p) * m];
            const double* b1 = b0 + m;
            const double* b2 = b1 + m;
            const double* b3 = b2 + m;
            for (int j = 0; j < m; ++j) crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = &b.v[static_cast<size_t>(p) * m];
            for (int j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows, b.cols);
    parallel_rows(a.rows, static_cast<int64_t>(a.rows) * a.cols * b.cols,
                  [&](int lo, int hi) { matmul_accum(a, b, c, lo, hi); });
    return c;
}

// out = a^T . g  (a: n x k, g: n x m, out: k x m), split over k.
Tensor matmul_at_b(const Tensor& a, const Tensor& g) {
    Tensor out(a.cols, g.cols);
    parallel_rows(a.cols, static_cast<int64_t>(a.rows) * a.cols * g.cols, [&](int lo, int hi) {
        for (int n = 0; n < a.rows; ++n) {
            const double* arow = &a.v[static_cast<size_t>(n) * a.cols];
            const double* grow = &g.v[static_cast<size_t>(n) * g.cols];
            for (int i = lo; i < hi; ++i) {
                const double ani = arow[i];
                double* orow = &out.v[static_cast<size_t>(i) * g.cols];
                for (int j = 0; j < g.cols; ++j) orow[j] += ani * grow[j];
            }
        }
    });
    return out;
}

// out = g . b^T  (g: n x m, b: k x m, out: n x k), split over n.
Tensor matmul_a_bt(const Tensor& g, const Tensor& b) {
    Tensor out(g.rows, b.rows);
    parallel_rows(g.rows, static_cast<int64_t>(g.rows) * g.cols * b.rows, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const double* grow = &g.v[static_cast<size_t>(i) * g.cols];
            double* orow = &out.v[static_cast<size_t>(i) * b.rows];
            for (int p = 0; p < b.rows; ++p) {
                const double* brow = &b.v[static_cast<size_t>(p) * b.cols];
                double s = 0.0;
                for (int j = 0; j < g.cols; ++j) s += grow[j] * brow[j];
                orow[p] = s;
            }
        }
    });
    return out;
}

Tensor masked_weights(const Tensor& w, const Tensor& mask) {
    Tensor wm = w;
    for (size_t i = 0; i < wm.v.size(); ++i) wm.v[i] *= mask.v[i];
    return wm;
}

double softplus_scalar(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }
int max_threads() { return g_max_threads.load(); }

Tensor matmul_values(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) throw DimensionError("matmul_values: inner dims differ");
    return matmul_plain(a, b);
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tape::Node& Tape::at(Var v) { return nodes_[static_cast<size_t>(v.id)]; }
const Tape::Node& Tape::at(Var v) const { return nodes_[static_cast<size_t>(v.id)]; }

const Tensor& Tape::val(Var v) const { return at(v).val; }

double Tape::scalar_value(Var v) const {
    const Tensor& t = at(v).val;
    if (t.rows != 1 || t.cols != 1) throw DimensionError("scalar_value: node is not 1x1");
    return t.v[0];
}

Var Tape::constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(t);
    return {push(std::move(n))};
}

Var Tape::param(ParamTensor& p) {
    Node n;
    n.op = Op::Param;
    n.val = p.value;
    n.bound = &p;
    return {push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.cols != tb.rows) throw DimensionError("matmul: inner dims differ");
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.val = matmul_plain(ta, tb);
    return {push(std::move(n))};
}

Var Tape::matmul_masked(Var x, Var w, const Tensor* mask) {
    const Tensor& tx = val(x);
    const Tensor& tw = val(w);
    if (tx.cols != tw.rows) throw DimensionError("matmul_masked: inner dims differ");
    if (!mask || mask->rows != tw.rows || mask->cols != tw.cols)
        throw DimensionError("matmul_masked: mask shape must match weights");
    Node n;
    n.op = Op::MatMulMasked;
    n.a = x.id;
    n.b = w.id;
    n.mask = mask;
    Tensor wm = masked_weights(tw, *mask);
    n.val = matmul_plain(tx, wm);
    return {push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb)) throw DimensionError("add: shape mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.val = ta;
    for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] += tb.v[i];
    return {push(std::move(n))};
}

Var Tape::add_row(Var a, Var row) {
    const Tensor &ta = val(a), &tr = val(row);
    if (tr.rows != 1 || tr.cols != ta.cols) throw DimensionError("add_row: row must be 1 x cols(a)");
    Node n;
    n.op = Op::AddRow;
    n.a = a.id;
    n.b = row.id;
    n.val = ta;
    for (int i = 0; i < ta.rows; ++i)
        for (int j = 0; j < ta.cols; ++j) n.val(i, j) += tr.v[static_cast<size_t>(j)];
    return {push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb)) throw DimensionError("sub: shape mismatch");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.val = ta;
    for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] -= tb.v[i];
    return {push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb)) throw DimensionError("mul: shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.val = ta;
    for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] *= tb.v[i];
    return {push(std::move(n))};
}

Var Tape::div(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb)) throw DimensionError("div: shape mismatch");
    Node n;
    n.op = Op::Div;
    n.a = a.id;
    n.b = b.id;
    n.val = ta;
    for (size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] /= tb.v[i];
    return {push(std::move(n))};
}

Var Tape::affine(Var a, double scale, double shift) {
    Node n;
    n.op = Op::Affine;
    n.a = a.id;
    n.s0 = scale;
    n.s1 = shift;
    n.val = val(a);
    for (double& x : n.val.v) x = scale * x + shift;
    return {push(std::move(n))};
}

Var Tape::mul_scalar_var(Var a, Var s) {
    if (val(s).rows != 1 || val(s).cols != 1) throw DimensionError("mul_scalar_var: s must be 1x1");
    Node n;
    n.op = Op::MulScalarVar;
    n.a = a.id;
    n.b = s.id;
    n.val = val(a);
    const double sv = val(s).v[0];
    for (double& x : n.val.v) x *= sv;
    return {push(std::move(n))};
}

Var Tape::add_scalar_var(Var a, Var s) {
    if (val(s).rows != 1 || val(s).cols != 1) throw DimensionError("add_scalar_var: s must be 1x1");
    Node n;
    n.op = Op::AddScalarVar;
    n.a = a.id;
    n.b = s.id;
    n.val = val(a);
    const double sv = val(s).v[0];
    for (double& x : n.val.v) x += sv;
    return {push(std::move(n))};
}

#define FF_UNARY(NAME, OPK, EXPR)                  \
    Var Tape::NAME(Var a) {                        \
        Node n;                                    \
        n.op = Op::OPK;                            \
        n.a = a.id;                                \
        n.val = val(a);                            \
        for (double& x : n.val.v) x = (EXPR);      \
        return {push(std::move(n))};               \
    }

FF_UNARY(tanh_, Tanh, std::tanh(x))
FF_UNARY(sigmoid_, Sigmoid, x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)))
FF_UNARY(exp_, Exp, std::exp(x))
FF_UNARY(log_, Log, std::log(x))
FF_UNARY(softplus_, Softplus, softplus_scalar(x))
FF_UNARY(square_, Square, x* x)
FF_UNARY(normal_cdf_, NormalCdf, 0.5 * std::erfc(-x / std::sqrt(2.0)))
#undef FF_UNARY

Var Tape::softmax_rows(Var a) {
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = a.id;
    const Tensor& ta = val(a);
    n.val = Tensor(ta.rows, ta.cols);
    for (int i = 0; i < ta.rows; ++i) {
        double mx = ta(i, 0);
        for (int j = 1; j < ta.cols; ++j) mx = std::max(mx, ta(i, j));
        double sum = 0.0;
        for (int j = 0; j < ta.cols; ++j) {
            double e = std::exp(ta(i, j) - mx);
            n.val(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < ta.cols; ++j) n.val(i, j) /= sum;
    }
    return {push(std::move(n))};
}

Var Tape::cumsum_rows(Var a) {
    Node n;
    n.op = Op::CumsumRows;
    n.a = a.id;
    const Tensor& ta = val(a);
    n.val = Tensor(ta.rows, ta.cols);
    for (int i = 0; i < ta.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < ta.cols; ++j) {
            s += ta(i, j);
            n.val(i, j) = s;
        }
    }
    return {push(std::move(n))};
}

Var Tape::row_sum(Var a) {
    Node n;
    n.op = Op::RowSum;
    n.a = a.id;
    const Tensor& ta = val(a);
    n.val = Tensor(ta.rows, 1);
    for (int i = 0; i < ta.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < ta.cols; ++j) s += ta(i, j);
        n.val(i, 0) = s;
    }
    return {push(std::move(n))};
}

Var Tape::sum_all(Var a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a.id;
    double s = 0.0;
    for (double x : val(a).v) s += x;
    n.val = Tensor(1, 1);
    n.val.v[0] = s;
    return {push(std::move(n))};
}

Var Tape::mean_all(Var a) {
    Node n;
    n.op = Op::MeanAll;
    n.a = a.id;
    double s = 0.0;
    for (double x : val(a).v) s += x;
    n.val = Tensor(1, 1);
    n.val.v[0] = s / static_cast<double>(val(a).size());
    return {push(std::move(n))};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Tensor& ta = val(a);
    if (c0 < 0 || c1 > ta.cols || c0 >= c1) throw DimensionError("slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.a = a.id;
    n.i0 = c0;
    n.i1 = c1;
    n.val = Tensor(ta.rows, c1 - c0);
    for (int i = 0; i < ta.rows; ++i)
        for (int j = c0; j < c1; ++j) n.val(i, j - c0) = ta(i, j);
    return {push(std::move(n))};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: empty");
    int rows = val(parts[0]).rows, cols = 0;
    for (Var p : parts) {
        if (val(p).rows != rows) throw DimensionError("concat_cols: row mismatch");
        cols += val(p).cols;
    }
    Node n;
    n.op = Op::ConcatCols;
    for (Var p : parts) n.inputs.push_back(p.id);
    n.val = Tensor(rows, cols);
    int off = 0;
    for (Var p : parts) {
        const Tensor& tp = val(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < tp.cols; ++j) n.val(i, off + j) = tp(i, j);
        off += tp.cols;
    }
    return {push(std::move(n))};
}

Var Tape::reshape(Var a, int rows, int cols) {
    const Tensor& ta = val(a);
    if (static_cast<size_t>(rows) * cols != ta.size()) throw DimensionError("reshape: size mismatch");
    Node n;
    n.op = Op::Reshape;
    n.a = a.id;
    n.val = ta;
    n.val.rows = rows;
    n.val.cols = cols;
    return {push(std::move(n))};
}

Var Tape::broadcast_rows(Var a, int rows) {
    const Tensor& ta = val(a);
    if (ta.rows != 1) throw DimensionError("broadcast_rows: input must be 1 x m");
    Node n;
    n.op = Op::BroadcastRows;
    n.a = a.id;
    n.val = Tensor(rows, ta.cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < ta.cols; ++j) n.val(i, j) = ta(0, j);
    return {push(std::move(n))};
}

Var Tape::broadcast_cols(Var a, int cols) {
    const Tensor& ta = val(a);
    if (ta.cols != 1) throw DimensionError("broadcast_cols: input must be n x 1");
    Node n;
    n.op = Op::BroadcastCols;
    n.a = a.id;
    n.val = Tensor(ta.rows, cols);
    for (int i = 0; i < ta.rows; ++i)
        for (int j = 0; j < cols; ++j) n.val(i, j) = ta(i, 0);
    return {push(std::move(n))};
}

Var Tape::gather_cols(Var a, std::vector<int> idx) {
    const Tensor& ta = val(a);
    if (static_cast<int>(idx.size()) != ta.rows) throw DimensionError("gather_cols: need one index per row");
    Node n;
    n.op = Op::GatherCols;
    n.a = a.id;
    n.val = Tensor(ta.rows, 1);
    for (int i = 0; i < ta.rows; ++i) {
        int j = idx[static_cast<size_t>(i)];
        if (j < 0 || j >= ta.cols) throw DimensionError("gather_cols: index out of range");
        n.val(i, 0) = ta(i, j);
    }
    n.idx = std::move(idx);
    return {push(std::move(n))};
}

Var Tape::where(std::vector<uint8_t> take_a, Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb)) throw DimensionError("where: shape mismatch");
    if (take_a.size() != ta.size()) throw DimensionError("where: selector size mismatch");
    Node n;
    n.op = Op::Where;
    n.a = a.id;
    n.b = b.id;
    n.val = ta;
    for (size_t i = 0; i < n.val.v.size(); ++i)
        if (!take_a[i]) n.val.v[i] = tb.v[i];
    n.sel = std::move(take_a);
    return {push(std::move(n))};
}

Tensor& Tape::grad_of(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.rows != n.val.rows || n.grad.cols != n.val.cols) n.grad = Tensor(n.val.rows, n.val.cols);
    return n.grad;
}

const char* Tape::op_name(Op op) const {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Param: return "param";
        case Op::MatMul: return "matmul";
        case Op::MatMulMasked: return "matmul_masked";
        case Op::Add: return "add";
        case Op::AddRow: return "add_row";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Affine: return "affine";
        case Op::MulScalarVar: return "mul_scalar_var";
        case Op::AddScalarVar: return "add_scalar_var";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Softplus: return "softplus";
        case Op::Square: return "square";
        case Op::NormalCdf: return "normal_cdf";
        case Op::SoftmaxRows: return "softmax_rows";
        case Op::CumsumRows: return "cumsum_rows";
        case Op::RowSum: return "row_sum";
        case Op::SumAll: return "sum_all";
        case Op::MeanAll: return "mean_all";
        case Op::SliceCols: return "slice_cols";
        case Op::ConcatCols: return "concat_cols";
        case Op::Reshape: return "reshape";
        case Op::BroadcastRows: return "broadcast_rows";
        case Op::BroadcastCols: return "broadcast_cols";
        case Op::GatherCols: return "gather_cols";
        case Op::Where: return "where";
    }
    return "?";
}

void Tape::backward(Var loss) {
    const Tensor& lv = val(loss);
    if (lv.rows != 1 || lv.cols != 1) throw DimensionError("backward: loss must be 1x1");
    if (!std::isfinite(lv.v[0])) {
        // find the first node that went non-finite for the error message
        for (size_t i = 0; i < nodes_.size(); ++i)
            if (!nodes_[i].val.all_finite())
                throw NumericError(std::string("backward: non-finite value first produced by op '") +
                                   op_name(nodes_[i].op) + "' (node " + std::to_string(i) + ")");
        throw NumericError("backward: loss is non-finite");
    }
    grad_of(loss.id).v[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) backward_node(id);
    for (auto& n : nodes_) {
        if (n.op == Op::Param && n.grad.size() == n.val.size() && n.bound) {
            for (size_t i = 0; i < n.grad.v.size(); ++i) n.bound->grad.v[i] += n.grad.v[i];
        }
    }
}

void Tape::backward_node(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() != n.val.size()) return;  // no gradient flowed here
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Constant:
        case Op::Param:
            break;
        case Op::MatMul: {
            const Tensor& a = nodes_[n.a].val;
            const Tensor& b = nodes_[n.b].val;
            Tensor da = matmul_a_bt(g, b);
            Tensor db = matmul_at_b(a, g);
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += da.v[i];
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += db.v[i];
            break;
        }
        case Op::MatMulMasked: {
            const Tensor& x = nodes_[n.a].val;
            const Tensor& w = nodes_[n.b].val;
            Tensor wm = masked_weights(w, *n.mask);
            Tensor dx = matmul_a_bt(g, wm);
            Tensor dw = matmul_at_b(x, g);
            for (size_t i = 0; i < dw.v.size(); ++i) dw.v[i] *= n.mask->v[i];
            Tensor& gx = grad_of(n.a);
            for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += dx.v[i];
            Tensor& gw = grad_of(n.b);
            for (size_t i = 0; i < gw.v.size(); ++i) gw.v[i] += dw.v[i];
            break;
        }
        case Op::Add: {
            Tensor& ga = grad_of(n.a);
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i];
                gb.v[i] += g.v[i];
            }
            break;
        }
        case Op::AddRow: {
            Tensor& ga = grad_of(n.a);
            Tensor& gr = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) gr.v[static_cast<size_t>(j)] += g(i, j);
            break;
        }
        case Op::Sub: {
            Tensor& ga = grad_of(n.a);
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i];
                gb.v[i] -= g.v[i];
            }
            break;
        }
        case Op::Mul: {
            const Tensor& a = nodes_[n.a].val;
            const Tensor& b = nodes_[n.b].val;
            Tensor& ga = grad_of(n.a);
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i] * b.v[i];
                gb.v[i] += g.v[i] * a.v[i];
            }
            break;
        }
        case Op::Div: {
            const Tensor& a = nodes_[n.a].val;
            const Tensor& b = nodes_[n.b].val;
            Tensor& ga = grad_of(n.a);
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i] / b.v[i];
                gb.v[i] -= g.v[i] * a.v[i] / (b.v[i] * b.v[i]);
            }
            break;
        }
        case Op::Affine: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * n.s0;
            break;
        }
        case Op::MulScalarVar: {
            const Tensor& a = nodes_[n.a].val;
            const double sv = nodes_[n.b].val.v[0];
            Tensor& ga = grad_of(n.a);
            Tensor& gs = grad_of(n.b);
            double acc = 0.0;
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i] * sv;
                acc += g.v[i] * a.v[i];
            }
            gs.v[0] += acc;
            break;
        }
        case Op::AddScalarVar: {
            Tensor& ga = grad_of(n.a);
            Tensor& gs = grad_of(n.b);
            double acc = 0.0;
            for (size_t i = 0; i < g.v.size(); ++i) {
                ga.v[i] += g.v[i];
                acc += g.v[i];
            }
            gs.v[0] += acc;
            break;
        }
        case Op::Tanh: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
            break;
        }
        case Op::Sigmoid: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * n.val.v[i] * (1.0 - n.val.v[i]);
            break;
        }
        case Op::Exp: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * n.val.v[i];
            break;
        }
        case Op::Log: {
            const Tensor& a = nodes_[n.a].val;
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] / a.v[i];
            break;
        }
        case Op::Softplus: {
            const Tensor& a = nodes_[n.a].val;
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) {
                double x = a.v[i];
                double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                ga.v[i] += g.v[i] * s;
            }
            break;
        }
        case Op::Square: {
            const Tensor& a = nodes_[n.a].val;
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * 2.0 * a.v[i];
            break;
        }
        case Op::NormalCdf: {
            const Tensor& a = nodes_[n.a].val;
            Tensor& ga = grad_of(n.a);
            const double inv_sqrt2pi = 0.3989422804014327;
            for (size_t i = 0; i < g.v.size(); ++i)
                ga.v[i] += g.v[i] * inv_sqrt2pi * std::exp(-0.5 * a.v[i] * a.v[i]);
            break;
        }
        case Op::SoftmaxRows: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i) {
                double dot = 0.0;
                for (int j = 0; j < g.cols; ++j) dot += g(i, j) * n.val(i, j);
                for (int j = 0; j < g.cols; ++j) ga(i, j) += n.val(i, j) * (g(i, j) - dot);
            }
            break;
        }
        case Op::CumsumRows: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i) {
                double s = 0.0;
                for (int j = g.cols - 1; j >= 0; --j) {
                    s += g(i, j);
                    ga(i, j) += s;
                }
            }
            break;
        }
        case Op::RowSum: {
            const Tensor& a = nodes_[n.a].val;
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < a.rows; ++i)
                for (int j = 0; j < a.cols; ++j) ga(i, j) += g(i, 0);
            break;
        }
        case Op::SumAll: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[0];
            break;
        }
        case Op::MeanAll: {
            Tensor& ga = grad_of(n.a);
            double s = g.v[0] / static_cast<double>(ga.size());
            for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += s;
            break;
        }
        case Op::SliceCols: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga(i, n.i0 + j) += g(i, j);
            break;
        }
        case Op::ConcatCols: {
            int off = 0;
            for (int src : n.inputs) {
                Tensor& gs = grad_of(src);
                for (int i = 0; i < gs.rows; ++i)
                    for (int j = 0; j < gs.cols; ++j) gs(i, j) += g(i, off + j);
                off += gs.cols;
            }
            break;
        }
        case Op::Reshape: {
            Tensor& ga = grad_of(n.a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            break;
        }
        case Op::BroadcastRows: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga(0, j) += g(i, j);
            break;
        }
        case Op::BroadcastCols: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga(i, 0) += g(i, j);
            break;
        }
        case Op::GatherCols: {
            Tensor& ga = grad_of(n.a);
            for (int i = 0; i < g.rows; ++i) ga(i, n.idx[static_cast<size_t>(i)]) += g(i, 0);
            break;
        }
        case Op::Where: {
            Tensor& ga = grad_of(n.a);
            Tensor& gb = grad_of(n.b);
            for (size_t i = 0; i < g.v.size(); ++i) {
                if (n.sel[i])
                    ga.v[i] += g.v[i];
                else
                    gb.v[i] += g.v[i];
            }
            break;
        }
    }
}

}  // namespace ff::diff
