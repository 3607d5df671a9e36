#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ff/errors.hpp"

namespace ff {

// Dense row-major matrix of doubles. Column vectors are n x 1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    static Tensor column(std::vector<double> data) {
        Tensor t;
        t.rows = static_cast<int>(data.size());
        t.cols = 1;
        t.v = std::move(data);
        return t;
    }

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline void require_shape(const Tensor& t, int r, int c, const std::string& what) {
    if (t.rows != r || t.cols != c)
        throw DimensionError(what + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                             std::to_string(t.rows) + "x" + std::to_string(t.cols));
}

// Trainable array plus its gradient accumulator.
struct ParamTensor {
    std::string name;
    Tensor value;
    Tensor grad;

    ParamTensor() = default;
    ParamTensor(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}

    void zero_grad() { grad.fill(0.0); }
};

}  // namespace ff
