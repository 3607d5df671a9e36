#include "ff/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ff/bijectors.hpp"
#include "ff/errors.hpp"
#include "ff/rng.hpp"
#include "ff/spline_graph.hpp"

namespace ff::copula {

using diff::Tape;
using diff::Var;

void CopulaFlowConfig::validate() const {
    if (dim < 2) throw ValidationError("CopulaFlowConfig: need at least two dimensions");
    if (static_cast<int>(degrees.size()) != dim || static_cast<int>(identity.size()) != dim ||
        static_cast<int>(perm_block.size()) != dim)
        throw DimensionError("CopulaFlowConfig: per-position arrays must have length dim");
    if (subflows < 1 || knots < 2) throw ValidationError("CopulaFlowConfig: bad subflows/knots");
    bool any_transformed = false;
    for (int p = 0; p < dim; ++p) {
        if (!identity[static_cast<size_t>(p)]) any_transformed = true;
        if (identity[static_cast<size_t>(p)] && perm_block[static_cast<size_t>(p)] != -1)
            throw ValidationError("CopulaFlowConfig: identity positions must not be permuted");
    }
    if (!any_transformed) throw ValidationError("CopulaFlowConfig: nothing to transform");
}

CopulaFlow CopulaFlow::standard(int n_covariates, const TrainConfig& cfg, uint64_t seed) {
    if (n_covariates < 1) throw ValidationError("CopulaFlow::standard: need at least one covariate");
    CopulaFlowConfig c;
    c.dim = n_covariates + 1;
    c.degrees.resize(static_cast<size_t>(c.dim));
    c.identity.assign(static_cast<size_t>(c.dim), 0);
    c.perm_block.assign(static_cast<size_t>(c.dim), 0);
    c.identity[0] = 1;
    c.perm_block[0] = -1;
    for (int p = 0; p < c.dim; ++p) c.degrees[static_cast<size_t>(p)] = p;
    c.subflows = cfg.flow_layers;
    c.knots = cfg.knots;
    c.hidden_width = cfg.hidden_width;
    c.hidden_depth = cfg.hidden_depth;
    return from_config(std::move(c), seed);
}

CopulaFlow CopulaFlow::heterogeneous(int n_w, int n_rest, const TrainConfig& cfg, uint64_t seed) {
    if (n_w < 1 || n_rest < 1)
        throw ValidationError("CopulaFlow::heterogeneous: both covariate blocks must be non-empty");
    CopulaFlowConfig c;
    c.dim = n_w + 1 + n_rest;
    c.degrees.resize(static_cast<size_t>(c.dim));
    c.identity.assign(static_cast<size_t>(c.dim), 0);
    c.perm_block.assign(static_cast<size_t>(c.dim), 0);
    for (int p = 0; p < n_w; ++p) {
        c.degrees[static_cast<size_t>(p)] = p + 1;
        c.perm_block[static_cast<size_t>(p)] = 0;
    }
    c.identity[static_cast<size_t>(n_w)] = 1;
    c.perm_block[static_cast<size_t>(n_w)] = -1;
    c.degrees[static_cast<size_t>(n_w)] = n_w + 1;
    for (int p = 0; p < n_rest; ++p) {
        c.degrees[static_cast<size_t>(n_w + 1 + p)] = n_w + 2 + p;
        c.perm_block[static_cast<size_t>(n_w + 1 + p)] = 1;
    }
    c.subflows = cfg.flow_layers;
    c.knots = cfg.knots;
    c.hidden_width = cfg.hidden_width;
    c.hidden_depth = cfg.hidden_depth;
    return from_config(std::move(c), seed);
}

CopulaFlow CopulaFlow::from_config(CopulaFlowConfig cfg, uint64_t seed) {
    cfg.validate();
    CopulaFlow flow;
    flow.cfg_ = std::move(cfg);
    const CopulaFlowConfig& c = flow.cfg_;

    for (int p = 0; p < c.dim; ++p)
        if (!c.identity[static_cast<size_t>(p)]) flow.transformed_.push_back(p);

    const int pu = 3 * c.knots - 1;
    std::vector<int> out_degrees;
    for (int p : flow.transformed_)
        out_degrees.insert(out_degrees.end(), static_cast<size_t>(pu), c.degrees[static_cast<size_t>(p)]);

    Rng init = Rng::substream(seed, "copula-conditioner-init");
    for (int k = 0; k < c.subflows; ++k) {
        flow.mlps_.emplace_back(c.degrees, 0, out_degrees, c.hidden_width, c.hidden_depth);
        flow.mlps_.back().init(init, true);
    }

    // Fixed pseudo-random rotations of each permutation block between subflows.
    Rng perm_rng = Rng::substream(seed, "copula-permutations");
    for (int k = 0; k + 1 < c.subflows; ++k) {
        std::vector<int> perm(static_cast<size_t>(c.dim));
        std::iota(perm.begin(), perm.end(), 0);
        int max_block = *std::max_element(c.perm_block.begin(), c.perm_block.end());
        for (int blk = 0; blk <= max_block; ++blk) {
            std::vector<int> members;
            for (int p = 0; p < c.dim; ++p)
                if (c.perm_block[static_cast<size_t>(p)] == blk) members.push_back(p);
            std::vector<int> shuffled = members;
            perm_rng.shuffle(shuffled);
            for (size_t i = 0; i < members.size(); ++i) perm[static_cast<size_t>(members[i])] = shuffled[i];
        }
        flow.perms_.push_back(std::move(perm));
    }
    flow.refresh_final_positions();
    return flow;
}

void CopulaFlow::refresh_final_positions() {
    final_pos_.resize(static_cast<size_t>(cfg_.dim));
    std::iota(final_pos_.begin(), final_pos_.end(), 0);
    for (const auto& perm : perms_) {
        std::vector<int> inv(perm.size());
        for (size_t p = 0; p < perm.size(); ++p) inv[static_cast<size_t>(perm[p])] = static_cast<int>(p);
        for (int& fp : final_pos_) fp = inv[static_cast<size_t>(fp)];
    }
}

std::vector<ParamTensor*> CopulaFlow::parameters() {
    std::vector<ParamTensor*> ps;
    for (auto& mlp : mlps_) {
        auto sub = mlp.parameters();
        ps.insert(ps.end(), sub.begin(), sub.end());
    }
    return ps;
}

CopulaFlow::GraphOut CopulaFlow::build_graph(Tape& tape, const std::vector<Var>& v_cols) {
    const CopulaFlowConfig& c = cfg_;
    if (static_cast<int>(v_cols.size()) != c.dim)
        throw DimensionError("CopulaFlow: expected one column per position");
    const int n = tape.val(v_cols[0]).rows;
    const int nt = static_cast<int>(transformed_.size());
    const int pu = 3 * c.knots - 1;
    const diff::SplineGraphConfig sg{c.knots, 1.0, c.min_bin, c.min_deriv};

    // Identity positions keep their rank-space column on the data path; the
    // conditioner sees all positions in spline space.
    std::vector<Var> state(v_cols.size());
    std::vector<Var> id_cond(v_cols.size());
    for (int p = 0; p < c.dim; ++p) {
        if (c.identity[static_cast<size_t>(p)])
            id_cond[static_cast<size_t>(p)] = tape.affine(v_cols[static_cast<size_t>(p)], 2.0, -1.0);
        else
            state[static_cast<size_t>(p)] = tape.affine(v_cols[static_cast<size_t>(p)], 2.0, -1.0);
    }
    // The in/out affine wrappers onto [-1,1] have log-determinants that cancel
    // exactly, so neither is accumulated.

    Var logdet = tape.constant(Tensor(n, 1, 0.0));
    for (int k = 0; k < c.subflows; ++k) {
        std::vector<Var> cond_cols(static_cast<size_t>(c.dim));
        for (int p = 0; p < c.dim; ++p)
            cond_cols[static_cast<size_t>(p)] = c.identity[static_cast<size_t>(p)]
                                                    ? id_cond[static_cast<size_t>(p)]
                                                    : state[static_cast<size_t>(p)];
        Var cond_in = tape.concat_cols(cond_cols);
        Var raw = mlps_[static_cast<size_t>(k)].forward(tape, cond_in, std::nullopt);

        // Batch all transformed positions through one spline pipeline:
        // rows become (sample, position) pairs.
        std::vector<Var> xs;
        for (int p : transformed_) xs.push_back(state[static_cast<size_t>(p)]);
        Var x_flat = tape.reshape(tape.concat_cols(xs), n * nt, 1);
        Var raw_flat = tape.reshape(raw, n * nt, pu);
        auto knots = diff::build_spline_knots(tape, raw_flat, sg);
        auto applied = diff::rqs_apply_graph(tape, x_flat, knots, sg);
        Var y_mat = tape.reshape(applied.y, n, nt);
        Var ld_mat = tape.reshape(applied.logdet, n, nt);
        for (int j = 0; j < nt; ++j)
            state[static_cast<size_t>(transformed_[static_cast<size_t>(j)])] = tape.slice_cols(y_mat, j, j + 1);
        logdet = tape.add(logdet, tape.row_sum(ld_mat));

        if (k + 1 < c.subflows) {
            const std::vector<int>& perm = perms_[static_cast<size_t>(k)];
            std::vector<Var> next(state.size());
            for (int p = 0; p < c.dim; ++p)
                next[static_cast<size_t>(p)] = state[static_cast<size_t>(perm[static_cast<size_t>(p)])];
            state = std::move(next);
        }
    }
    return GraphOut{logdet};
}

namespace {

Tensor conditioner_input(const CopulaFlowConfig& c, const Tensor& state, const Tensor& id_cond) {
    Tensor in(state.rows, c.dim);
    for (int i = 0; i < state.rows; ++i)
        for (int p = 0; p < c.dim; ++p)
            in(i, p) = c.identity[static_cast<size_t>(p)] ? id_cond(i, p) : state(i, p);
    return in;
}

}  // namespace

Tensor CopulaFlow::push_forward(const Tensor& v, std::vector<double>* logdet) const {
    const CopulaFlowConfig& c = cfg_;
    if (v.cols != c.dim) throw DimensionError("CopulaFlow::push_forward: column count mismatch");
    const int n = v.rows;
    const int pu = 3 * c.knots - 1;

    Tensor state(n, c.dim), id_cond(n, c.dim, 0.0);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < c.dim; ++p) {
            if (c.identity[static_cast<size_t>(p)])
                id_cond(i, p) = 2.0 * v(i, p) - 1.0;
            else
                state(i, p) = 2.0 * v(i, p) - 1.0;
        }
    if (logdet) logdet->assign(static_cast<size_t>(n), 0.0);

    for (int k = 0; k < c.subflows; ++k) {
        Tensor raw = mlps_[static_cast<size_t>(k)].forward_frozen(conditioner_input(c, state, id_cond), nullptr);
        for (size_t j = 0; j < transformed_.size(); ++j) {
            const int p = transformed_[j];
            for (int i = 0; i < n; ++i) {
                std::span<const double> row(
                    &raw.v[static_cast<size_t>(i) * raw.cols + j * static_cast<size_t>(pu)],
                    static_cast<size_t>(pu));
                auto spline = bij::RqsSpline::from_raw(row, c.knots, 1.0, c.min_bin, c.min_deriv);
                auto r = bij::rqs_forward(spline, state(i, p));
                state(i, p) = r.y;
                if (logdet) (*logdet)[static_cast<size_t>(i)] += r.logdet;
            }
        }
        if (k + 1 < c.subflows) {
            const std::vector<int>& perm = perms_[static_cast<size_t>(k)];
            Tensor next = state;
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < c.dim; ++p) next(i, p) = state(i, perm[static_cast<size_t>(p)]);
            state = std::move(next);
        }
    }

    Tensor out(n, c.dim);
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < c.dim; ++q)
            out(i, q) = c.identity[static_cast<size_t>(q)]
                            ? v(i, q)
                            : 0.5 * state(i, final_pos_[static_cast<size_t>(q)]) + 0.5;
    return out;
}

std::vector<double> CopulaFlow::log_density(const Tensor& v) const {
    std::vector<double> ld;
    push_forward(v, &ld);
    return ld;
}

Tensor CopulaFlow::sample(const Tensor& u) const {
    const CopulaFlowConfig& c = cfg_;
    if (u.cols != c.dim) throw DimensionError("CopulaFlow::sample: column count mismatch");
    const int n = u.rows;
    const int pu = 3 * c.knots - 1;

    Tensor state(n, c.dim), id_cond(n, c.dim, 0.0);
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < c.dim; ++q) {
            if (c.identity[static_cast<size_t>(q)])
                id_cond(i, q) = 2.0 * u(i, q) - 1.0;
            else
                state(i, final_pos_[static_cast<size_t>(q)]) = 2.0 * u(i, q) - 1.0;
        }

    // Transformed positions in ascending degree order; lower degrees must be
    // recovered first because higher ones condition on them.
    std::vector<size_t> degree_order(transformed_.size());
    std::iota(degree_order.begin(), degree_order.end(), size_t{0});
    std::sort(degree_order.begin(), degree_order.end(), [&](size_t a, size_t b) {
        return c.degrees[static_cast<size_t>(transformed_[a])] <
               c.degrees[static_cast<size_t>(transformed_[b])];
    });

    for (int k = c.subflows - 1; k >= 0; --k) {
        if (k + 1 < c.subflows) {
            const std::vector<int>& perm = perms_[static_cast<size_t>(k)];
            Tensor prev(n, c.dim);
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < c.dim; ++p) prev(i, perm[static_cast<size_t>(p)]) = state(i, p);
            state = std::move(prev);
        }
        for (size_t oi : degree_order) {
            const int p = transformed_[oi];
            // Stale values at not-yet-inverted positions are masked out of
            // this position's conditioner outputs, so a full evaluation is safe.
            Tensor raw = mlps_[static_cast<size_t>(k)].forward_frozen(conditioner_input(c, state, id_cond), nullptr);
            for (int i = 0; i < n; ++i) {
                std::span<const double> row(
                    &raw.v[static_cast<size_t>(i) * raw.cols + oi * static_cast<size_t>(pu)],
                    static_cast<size_t>(pu));
                auto spline = bij::RqsSpline::from_raw(row, c.knots, 1.0, c.min_bin, c.min_deriv);
                state(i, p) = bij::rqs_inverse(spline, state(i, p)).y;
            }
        }
    }

    Tensor out(n, c.dim);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < c.dim; ++p)
            out(i, p) = c.identity[static_cast<size_t>(p)] ? u(i, p) : 0.5 * state(i, p) + 0.5;
    return out;
}

CopulaFlow fit_copula_flow(const Tensor& ranks, const TrainConfig& cfg) {
    cfg.validate();
    if (ranks.cols < 2) throw DimensionError("fit_copula_flow: need at least two rank columns");
    if (ranks.rows < 20) throw ValidationError("fit_copula_flow: too few rows");
    for (double v : ranks.v)
        if (!(v > 0.0 && v < 1.0)) throw ValidationError("fit_copula_flow: ranks must lie strictly in (0,1)");

    CopulaFlow flow = CopulaFlow::standard(ranks.cols - 1, cfg, Rng::derive_seed(cfg.seed, "copula"));

    std::vector<int> order(static_cast<size_t>(ranks.rows));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng split_rng = Rng::substream(cfg.seed, "copula-split");
    split_rng.shuffle(order);
    const int ntr = std::max(1, static_cast<int>(cfg.train_fraction * ranks.rows));
    Tensor train(ntr, ranks.cols), val(ranks.rows - ntr > 0 ? ranks.rows - ntr : 1, ranks.cols);
    for (int i = 0; i < ranks.rows; ++i) {
        Tensor& dst = i < ntr ? train : val;
        int r = i < ntr ? i : i - ntr;
        for (int j = 0; j < ranks.cols; ++j) dst(r, j) = ranks(order[static_cast<size_t>(i)], j);
    }
    if (ranks.rows - ntr == 0)
        for (int j = 0; j < ranks.cols; ++j) val(0, j) = train(ntr - 1, j);

    auto params = flow.parameters();
    auto build = [&](Tape& tape, bool train_split) {
        const Tensor& data = train_split ? train : val;
        Var all = tape.constant(data);
        std::vector<Var> cols;
        for (int j = 0; j < data.cols; ++j) cols.push_back(tape.slice_cols(all, j, j + 1));
        auto g = flow.build_graph(tape, cols);
        return tape.affine(tape.mean_all(g.logdet), -1.0, 0.0);
    };
    train_early_stop(params, cfg, build);
    return flow;
}

Tensor CopulaFlow::sample_given_first(std::span<const double> v1, const Tensor& u_rest) const {
    if (cfg_.dim != u_rest.cols + 1) throw DimensionError("sample_given_first: dimension mismatch");
    if (static_cast<int>(v1.size()) != u_rest.rows) throw DimensionError("sample_given_first: row mismatch");
    Tensor u(u_rest.rows, cfg_.dim);
    for (int i = 0; i < u_rest.rows; ++i) {
        u(i, 0) = v1[static_cast<size_t>(i)];
        for (int j = 0; j < u_rest.cols; ++j) u(i, j + 1) = u_rest(i, j);
    }
    return sample(u);
}

}  // namespace ff::copula
