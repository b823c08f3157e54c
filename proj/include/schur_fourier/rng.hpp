#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sf {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

/// splitmix64 step; used to decorrelate seeds derived from (seed, stream).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for chunk `index` of a batch started from `seed`.
inline std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

/// Deterministic generator with explicit transforms. All draws are specified
/// here rather than through std:: distributions, so that a given seed produces
/// the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform on (0,1), both endpoints excluded.
    double u01() {
        // 53-bit mantissa, shifted to the open interval
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
    }

    /// Uniform on (-1,1).
    double sym_u() { return 2.0 * u01() - 1.0; }

    double exponential() { return -std::log(u01()); }

    /// Standard normal via Box-Muller; consumes two uniforms, no caching.
    double normal() {
        const double r = std::sqrt(2.0 * exponential());
        return r * std::cos(kTwoPi * u01());
    }

    /// Gamma(shape, 1) by Marsaglia-Tsang squeeze.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = u01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = u01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Standard symmetric alpha-stable (cf e^{-|t|^alpha} in the e^{itX}
    /// convention) by the Chambers-Mallows-Stuck transform.
    double stable_std(double alpha) {
        const double u = kPi * (u01() - 0.5);  // uniform on (-pi/2, pi/2)
        if (alpha == 1.0) return std::tan(u);
        const double w = exponential();
        const double s = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha);
        const double t = std::pow(std::cos(u - alpha * u) / w, (1.0 - alpha) / alpha);
        return s * t;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace sf
