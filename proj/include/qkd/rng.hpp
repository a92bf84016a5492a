#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qkd {

// splitmix64 finalizer; used to derive decorrelated substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded random stream. All sampling is built on top of the 64-bit
// Mersenne Twister (fully specified by the standard) and explicit
// inverse/rejection samplers, so a given seed produces the same draw
// sequence on every platform. Distribution classes from <random> are
// deliberately not used: their algorithms are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    // Substream rule: fold (a, b) into the master seed via splitmix64.
    // Used for per-(scenario, iteration) streams in dataset generation.
    static std::uint64_t mix(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
        std::uint64_t s = splitmix64(master);
        s = splitmix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
        s = splitmix64(s ^ (b + 0x632be59bd9b4e019ULL));
        return s;
    }
    static RandomStream derive(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
        return RandomStream(mix(master, a, b));
    }

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    int bit() { return bernoulli(0.5) ? 1 : 0; }

    // Uniform integer in [0, n).
    std::size_t pick(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Box-Muller, stateless: two uniforms per draw.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    // Normal conditioned on x >= lo (rejection; the accept region always
    // has mass > 0 for the parameter ranges used here).
    double truncated_normal(double mean, double stddev, double lo = 0.0) {
        if (stddev <= 0.0) return std::max(mean, lo);
        for (int tries = 0; tries < 1000; ++tries) {
            const double x = normal(mean, stddev);
            if (x >= lo) return x;
        }
        return lo;
    }

    // Exponential-race sampler: exact for any mean, no underflow.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        double acc = 0.0;
        int k = -1;
        do {
            acc += -std::log(1.0 - uniform());
            ++k;
        } while (acc < mean);
        return k;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace qkd
