#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ff {

// Deterministic generator with named, order-independent substreams.
// One root seed fans out to substreams keyed by label; drawing from one
// substream never perturbs another, so pipeline stages can be swapped or
// skipped without changing the numbers elsewhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {
        if (state_ == 0) state_ = 0x106689d45497fdb5ull;
    }

    static uint64_t derive_seed(uint64_t root_seed, std::string_view name) {
        uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return splitmix(root_seed) ^ h;
    }

    static Rng substream(uint64_t root_seed, std::string_view name) {
        return Rng(derive_seed(root_seed, name));
    }

    uint64_t next_u64() {
        // xorshift64* — small, fast, and entirely ours, so streams are
        // bit-identical across platforms and standard-library versions.
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // Uniform on (0, 1): 53-bit mantissa, zero excluded.
    double uniform() {
        uint64_t bits = next_u64() >> 11;
        double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, w, s;
        do {
            u = 2.0 * uniform() - 1.0;
            w = 2.0 * uniform() - 1.0;
            s = u * u + w * w;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = w * f;
        have_spare_ = true;
        return u * f;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Marsaglia–Tsang for shape >= 1, boosted for shape < 1.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, vcube;
            do {
                x = normal();
                vcube = 1.0 + c * x;
            } while (vcube <= 0.0);
            vcube = vcube * vcube * vcube;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * vcube * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - vcube + std::log(vcube))) return d * vcube * scale;
        }
    }

    double exponential() { return -std::log(uniform()); }

    // Fisher–Yates.
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_u64() % i);
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ff
