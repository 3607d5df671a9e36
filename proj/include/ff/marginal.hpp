#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ff/bijectors.hpp"
#include "ff/tensor.hpp"
#include "ff/train.hpp"

namespace ff::marg {

inline constexpr double kRankClamp = 1e-6;

// Trainable univariate distribution model: a standardising affine, tanh onto
// (-1,1), a stack of rational-quadratic splines, and an affine onto (0,1).
// The forward map is the model CDF, so ranks of in-distribution samples are
// approximately uniform.
class UnivariateFlow {
public:
    static UnivariateFlow fit(std::span<const double> samples, const TrainConfig& cfg, uint64_t seed);

    double to_rank(double x) const;
    double from_rank(double u) const;
    double log_density(double x) const;

    std::vector<double> to_ranks(std::span<const double> xs) const;
    std::vector<double> from_ranks(std::span<const double> us) const;

    bool trained() const { return trained_; }
    const bij::Chain& chain() const { return chain_; }

    // Serialization hooks.
    static UnivariateFlow from_chain(bij::Chain c);

private:
    bij::Chain chain_;
    bool trained_ = false;
};

// Right-continuous step CDF of a discrete column.
struct StepCdf {
    std::vector<double> values;  // sorted distinct support
    std::vector<double> cum;     // F(values[i]); back() == 1

    static StepCdf from_samples(std::span<const double> xs);

    int index_of(double x) const;  // throws ValidationError on unknown level
    double f_left(int idx) const { return idx == 0 ? 0.0 : cum[static_cast<size_t>(idx) - 1]; }
    double f_at(int idx) const { return cum[static_cast<size_t>(idx)]; }

    // U = F(x-) + v (F(x) - F(x-))
    double transform_one(double x, double v) const;
    // the unique support value with F(x-) < u <= F(x)
    double inverse_one(double u) const;
};

std::vector<double> distributional_transform(std::span<const double> xs, const StepCdf& cdf,
                                             std::span<const double> v);
// Draws the auxiliary uniforms from a named substream of `seed`.
std::vector<double> distributional_transform(std::span<const double> xs, const StepCdf& cdf, uint64_t seed);

std::vector<double> inverse_distributional_transform(std::span<const double> us, const StepCdf& cdf);

}  // namespace ff::marg
