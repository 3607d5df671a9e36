#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ff/made.hpp"
#include "ff/tape.hpp"
#include "ff/tensor.hpp"
#include "ff/train.hpp"

namespace ff::copula {

// Layout of a multivariate autoregressive spline flow over rank space.
// Positions carry the structure: an identity position passes its variable
// through every subflow untouched (bit-exactly); a transformed position is
// mapped by a monotone spline whose parameters come from a masked conditioner
// that sees only positions of strictly lower degree. Between subflows the
// variables at transformed positions are permuted within their perm_block;
// block -1 never moves.
struct CopulaFlowConfig {
    int dim = 0;
    std::vector<int> degrees;
    std::vector<uint8_t> identity;
    std::vector<int> perm_block;
    int subflows = 5;
    int knots = 8;
    int hidden_width = 50;
    int hidden_depth = 4;
    double min_bin = 1e-3;
    double min_deriv = 1e-3;

    void validate() const;
};

class CopulaFlow {
public:
    CopulaFlow() = default;

    // Frugal layout: position 0 is the causal-margin rank, pinned to identity
    // with degree 0 so every covariate dimension may condition on it.
    static CopulaFlow standard(int n_covariates, const TrainConfig& cfg, uint64_t seed);

    // Heterogeneous layout: W block (degrees 1..w), conditional-margin rank as
    // identity between the blocks, then the remaining covariates, which may
    // condition on both the margin rank and W.
    static CopulaFlow heterogeneous(int n_w, int n_rest, const TrainConfig& cfg, uint64_t seed);

    static CopulaFlow from_config(CopulaFlowConfig cfg, uint64_t seed);

    struct GraphOut {
        diff::Var logdet;  // n x 1, equals log c per row
    };
    // Training-direction graph; v_cols holds one n x 1 rank column per
    // position, each strictly inside (0,1).
    GraphOut build_graph(diff::Tape& tape, const std::vector<diff::Var>& v_cols);

    std::vector<ParamTensor*> parameters();

    // log c(v_transformed | v_identity) per row; ranks strictly inside (0,1).
    std::vector<double> log_density(const Tensor& v) const;

    // Training-direction map per row; optionally accumulates log-determinants.
    Tensor push_forward(const Tensor& v, std::vector<double>* logdet = nullptr) const;

    // Generation direction: u holds base uniforms at transformed positions and
    // the conditioning rank values at identity positions, which are returned
    // unchanged.
    Tensor sample(const Tensor& u) const;

        // Convenience for the frugal layout: dim-1 ranks plus independent uniforms.
    Tensor sample_given_first(std::span<const double> v1, const Tensor& u_rest) const;

    const CopulaFlowConfig& config() const { return cfg_; }
    std::vector<diff::MaskedMlp>& conditioners() { return mlps_; }
    const std::vector<diff::MaskedMlp>& conditioners() const { return mlps_; }
    const std::vector<std::vector<int>>& permutations() const { return perms_; }
    void set_permutations(std::vector<std::vector<int>> p) {
        perms_ = std::move(p);
        refresh_final_positions();
    }

private:
    void refresh_final_positions();

    CopulaFlowConfig cfg_;
    std::vector<diff::MaskedMlp> mlps_;    // one conditioner per subflow
    std::vector<std::vector<int>> perms_;  // subflows-1 position permutations
    std::vector<int> transformed_;         // transformed positions in order
    std::vector<int> final_pos_;           // where variable q sits after all permutations
};

// Standalone maximum-likelihood fit of a frugal-layout copula flow on a rank
// matrix whose first column is the pinned dimension.
CopulaFlow fit_copula_flow(const Tensor& ranks, const TrainConfig& cfg);

}  // namespace ff::copula
