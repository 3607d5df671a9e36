#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ff/tensor.hpp"

namespace fftest {

// Central finite-difference gradient of a scalar function of the packed
// parameter vector; the independent oracle for every analytic gradient.
inline std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> at, double h = 1e-5) {
    std::vector<double> g(at.size());
    for (size_t i = 0; i < at.size(); ++i) {
        const double x0 = at[i];
        at[i] = x0 + h;
        const double fp = f(at);
        at[i] = x0 - h;
        const double fm = f(at);
        at[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double got, double want) {
    const double denom = std::max(1.0, std::fabs(want));
    return std::fabs(got - want) / denom;
}

inline std::vector<double> pack(const std::vector<ff::ParamTensor*>& ps) {
    std::vector<double> out;
    for (const auto* p : ps) out.insert(out.end(), p->value.v.begin(), p->value.v.end());
    return out;
}

inline void unpack(const std::vector<double>& flat, const std::vector<ff::ParamTensor*>& ps) {
    size_t k = 0;
    for (auto* p : ps)
        for (double& x : p->value.v) x = flat[k++];
}

inline std::vector<double> pack_grads(const std::vector<ff::ParamTensor*>& ps) {
    std::vector<double> out;
    for (const auto* p : ps) out.insert(out.end(), p->grad.v.begin(), p->grad.v.end());
    return out;
}

}  // namespace fftest
