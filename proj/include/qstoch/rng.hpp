#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace qstoch {

// Counter-based RNG: every draw is a pure function of (seed, stream, counter),
// so parallel consumers can sample disjoint counter ranges without sharing
// state and results are reproducible independent of scheduling.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t word(std::uint64_t counter) const {
        return mix(seed_ ^ mix(stream_ ^ mix(counter)));
    }

    // uniform on the open interval (0, 1)
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(word(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller
    double gaussian(std::uint64_t counter) const {
        double u1 = uniform(2 * counter);
        double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // complex standard normal, E|z|^2 = 1
    std::complex<double> complex_gaussian(std::uint64_t counter) const {
        double u1 = uniform(2 * counter);
        double u2 = uniform(2 * counter + 1);
        double r = std::sqrt(-std::log(u1));
        return {r * std::cos(two_pi * u2), r * std::sin(two_pi * u2)};
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static constexpr double two_pi = 6.283185307179586476925286766559;

    // splitmix64 finalizer; full 64-bit avalanche
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace qstoch
