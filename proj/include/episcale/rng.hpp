// Seeded random source for the simulator. mt19937_64 gives a portable bit
// stream; the distributions are implemented here because the standard
// library's are not bit-reproducible across implementations.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace episcale {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// splitmix64 finalizer over (seed, stream): derives independent
    /// sub-seeds so trials stay stable under parallel or reordered execution.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % bound;
    }

    /// Standard normal via Box-Muller (no state between calls).
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    /// Binomial(n, p) as an explicit Bernoulli sum; exact and portable for
    /// the contact-count sizes the simulator draws.
    std::int64_t binomial(std::int64_t n, double p) {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
        return k;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace episcale
