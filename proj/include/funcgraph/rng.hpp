#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace funcgraph::num {

/// Splittable counter-based pseudo-random generator (splitmix64 core).
///
/// Every stochastic component of a run (init, dropout, shuffles, splits)
/// forks its own stream from the run seed, so results are bit-reproducible
/// regardless of evaluation order or thread scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed ^ kGolden) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Derive an independent stream keyed by an integer tag.
    Rng fork(std::uint64_t tag) const {
        return Rng(mix(state_, tag ^ 0xa0761d6478bd642fULL));
    }

    /// Derive an independent stream keyed by a label.
    Rng fork(const std::string& label) const {
        std::uint64_t h = 1469598103934665603ULL; // FNV-1a
        for (unsigned char c : label) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return fork(h);
    }

    /// Uniform double in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + kGolden + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace funcgraph::num
