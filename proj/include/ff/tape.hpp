#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ff/tensor.hpp"

namespace ff::diff {

// Upper bound on worker threads used inside large matrix products.
// Partitioning is by output row, so results are bit-identical for any setting.
void set_max_threads(int n);
int max_threads();

// Plain (non-recorded) product using the same threaded kernel; frozen-model
// evaluation shares it so both paths stay numerically identical.
Tensor matmul_values(const Tensor& a, const Tensor& b);

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Record a scalar loss with the ops
// below, then call backward() once; gradients land in the bound ParamTensors.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor t);
    Var param(ParamTensor& p);

    Var matmul(Var a, Var b);
    // y = x . (w elementwise* mask); mask rows = inputs, cols = outputs.
    Var matmul_masked(Var x, Var w, const Tensor* mask);

    Var add(Var a, Var b);
    Var add_row(Var a, Var row);  // row is 1 x m, broadcast over rows of a
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var affine(Var a, double scale, double shift);
    Var mul_scalar_var(Var a, Var s);  // s is 1 x 1
    Var add_scalar_var(Var a, Var s);

    Var tanh_(Var a);
    Var sigmoid_(Var a);
    Var exp_(Var a);
    Var log_(Var a);
    Var softplus_(Var a);
    Var square_(Var a);
    Var normal_cdf_(Var a);

    Var softmax_rows(Var a);
    Var cumsum_rows(Var a);
    Var row_sum(Var a);
    Var sum_all(Var a);
    Var mean_all(Var a);

    Var slice_cols(Var a, int c0, int c1);
    Var concat_cols(const std::vector<Var>& parts);
    Var reshape(Var a, int rows, int cols);
    Var broadcast_rows(Var a, int rows);  // 1 x m -> rows x m
    Var broadcast_cols(Var a, int cols);  // n x 1 -> n x cols
    Var gather_cols(Var a, std::vector<int> idx);
    // take_a[i] != 0 selects a's element, else b's; gradients follow the choice.
    Var where(std::vector<uint8_t> take_a, Var a, Var b);

    const Tensor& val(Var v) const;
    double scalar_value(Var v) const;

    // Seeds d(loss)=1 and accumulates into every bound ParamTensor's grad.
    // loss must be 1x1 and finite; otherwise throws NumericError naming the
    // first op that produced a non-finite value.
    void backward(Var loss);

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        Constant, Param, MatMul, MatMulMasked, Add, AddRow, Sub, Mul, Div, Affine,
        MulScalarVar, AddScalarVar, Tanh, Sigmoid, Exp, Log, Softplus, Square,
        NormalCdf, SoftmaxRows, CumsumRows, RowSum, SumAll, MeanAll, SliceCols,
        ConcatCols, Reshape, BroadcastRows, BroadcastCols, GatherCols, Where
    };

    struct Node {
        Op op;
        Tensor val;
        Tensor grad;
        int a = -1, b = -1;
        int i0 = 0, i1 = 0;
        double s0 = 0.0, s1 = 0.0;
        std::vector<int> inputs;       // ConcatCols
        std::vector<int> idx;          // GatherCols
        std::vector<uint8_t> sel;      // Where
        const Tensor* mask = nullptr;  // MatMulMasked
        ParamTensor* bound = nullptr;  // Param
    };

    int push(Node n);
    Node& at(Var v);
    const Node& at(Var v) const;
    Tensor& grad_of(int id);
    void backward_node(int id);
    const char* op_name(Op op) const;

    std::vector<Node> nodes_;
};

}  // namespace ff::diff
