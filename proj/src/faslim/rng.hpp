#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "faslim/config.hpp"

namespace faslim {

/// mt19937_64 with hand-rolled output transforms so that sequences are
/// identical across standard libraries (std distributions are not pinned
/// by the standard). Substreams are derived by hashing a master seed with
/// counters, keeping Monte Carlo drops independent and reproducible.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b)
    {
        // splitmix64 finalizer over the combined word
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static RngStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0)
    {
        return RngStream(mix(mix(master, a), b));
    }

    /// uniform in [0, 1)
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// standard normal via Box-Muller; second value of each pair is cached
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0)
            u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// circularly-symmetric complex Gaussian, zero mean, unit variance
    std::complex<double> cgauss()
    {
        constexpr double inv_sqrt2 = 0.7071067811865475244;
        const double re = normal();
        const double im = normal();
        return {re * inv_sqrt2, im * inv_sqrt2};
    }

    /// uniform over a disk (rejection sampling)
    Vec2 in_disk(Vec2 center, double radius)
    {
        for (;;) {
            const double x = uniform(-1.0, 1.0);
            const double y = uniform(-1.0, 1.0);
            if (x * x + y * y <= 1.0)
                return {center.x + radius * x, center.y + radius * y};
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace faslim
