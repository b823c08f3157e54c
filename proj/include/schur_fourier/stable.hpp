#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/quadrature.hpp"

namespace sf {

/// Absolute p-th moment of the standard symmetric alpha-stable law
/// (cf e^{-|t|^alpha} in the e^{itX} convention), finite for -1 < p < alpha.
inline double stable_abs_moment_std(double alpha, double p) {
    if (!(p > -1.0 && p < alpha))
        throw DivergentMoment("stable law: E|X|^p finite only for p in (-1, alpha)");
    if (alpha == 2.0) {
        // N(0,2)
        return std::exp(p * 0.5 * std::log(2.0) + 0.5 * p * std::log(2.0) +
                        std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(kPi));
    }
    const double lg = p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) +
                      std::lgamma(1.0 - p / alpha) - 0.5 * std::log(kPi) -
                      std::lgamma(1.0 - 0.5 * p);
    return std::exp(lg);
}

namespace detail {

/// Density of the one-sided beta-stable law S with E e^{-uS} = e^{-u^beta},
/// 0 < beta < 1. Convergent power series where it is float-stable, otherwise
/// Fourier inversion of the characteristic function.
inline double onesided_stable_density(double x, double beta) {
    if (!(x > 0.0)) return 0.0;
    if (beta == 0.5) {
        // Levy closed form
        const double e = 0.25 / x;
        if (e > 700.0) return 0.0;
        return 0.5 / std::sqrt(kPi) * std::pow(x, -1.5) * std::exp(-e);
    }
    const double lx = std::log(x);
    double sum = 0.0, max_env = 0.0;
    int small = 0;
    bool stable_series = true;
    for (int k = 1; k < 500; ++k) {
        const double lt = std::lgamma(k * beta + 1.0) - std::lgamma(k + 1.0) - (k * beta + 1.0) * lx;
        if (lt > 650.0) {
            stable_series = false;
            break;
        }
        const double env = std::exp(lt);
        const double term = ((k & 1) ? env : -env) * std::sin(k * kPi * beta);
        sum += term;
        max_env = std::max(max_env, env);
        if (env < 1e-17 * std::max(std::abs(sum), 1e-300)) {
            if (++small >= 2 && k > 8) break;
        } else {
            small = 0;
        }
    }
    if (stable_series && max_env * 1e-16 <= 1e-9 * std::max(std::abs(sum), 1e-300))
        return std::max(sum / kPi, 0.0);

    // inversion: f(x) = (1/pi) int_0^inf exp(-u^b cos(pi b/2)) cos(xu - u^b sin(pi b/2)) du
    const double cb = std::cos(0.5 * kPi * beta);
    const double sb = std::sin(0.5 * kPi * beta);
    const double umax = std::pow(45.0 / cb, 1.0 / beta);
    auto g = [=](double u) {
        const double ub = std::pow(u, beta);
        return std::exp(-ub * cb) * std::cos(x * u - ub * sb);
    };
    // the series handles large x, so the x u phase stays modest here
    const double max_panel = 0.25 * kTwoPi / std::max(x, 1e-2);
    const double val = adapt_interval(g, 0.0, umax, 1e-13, 4000000, 1e-14, max_panel).value / kPi;
    return std::max(val, 0.0);
}

/// Quadrature rule (nodes, weights) for the Bernstein mixing measure of
/// exp(-c u^beta): the law of c^{1/beta} S_beta, truncated and discretized on
/// a geometric grid with Gauss-Legendre panels. Truncation budgets assume the
/// integrand decays at least like a^{-1/2} at infinity (true for the
/// Gaussian-mixture kernels these rules feed) and self-normalization at t=0.
struct MixingRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline MixingRule bernstein_mixing_rule(double beta, double c, int n_nodes) {
    if (!(beta > 0.0 && beta < 1.0)) throw Error("bernstein_mixing_rule: beta must be in (0,1)");
    if (!(c > 0.0)) throw Error("bernstein_mixing_rule: c must be positive");
    const double scale = std::pow(c, 1.0 / beta);
    // left endpoint: ~e^{-40} of mass; right endpoint: heavy-tail remainder
    // times the a^{-1/2} kernel decay below ~1e-9
    const double x_lo = beta * std::pow((1.0 - beta) / 40.0, (1.0 - beta) / beta);
    const double c_right = std::tgamma(beta) * std::sin(kPi * beta) / kPi;
    const double x_hi = std::pow(c_right / 1e-9, 1.0 / (beta + 0.5));

    static constexpr double gl_x[8] = {-0.960289856497536, -0.796666477413627,
                                       -0.525532409916329, -0.183434642495650,
                                       0.183434642495650,  0.525532409916329,
                                       0.796666477413627,  0.960289856497536};
    static constexpr double gl_w[8] = {0.101228536290376, 0.222381034453374,
                                       0.313706645877887, 0.362683783378362,
                                       0.362683783378362, 0.313706645877887,
                                       0.222381034453374, 0.101228536290376};
    const int n_panels = std::max(2, n_nodes / 8);
    const double l0 = std::log(x_lo), l1 = std::log(x_hi);
    MixingRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(n_panels) * 8);
    rule.weights.reserve(static_cast<std::size_t>(n_panels) * 8);
    for (int p = 0; p < n_panels; ++p) {
        const double a0 = l0 + (l1 - l0) * p / n_panels;
        const double b0 = l0 + (l1 - l0) * (p + 1) / n_panels;
        const double mid = 0.5 * (a0 + b0), half = 0.5 * (b0 - a0);
        for (int i = 0; i < 8; ++i) {
            const double v = mid + half * gl_x[i];
            const double a = std::exp(v);
            const double w = gl_w[i] * half * a * onesided_stable_density(a, beta);
            if (w > 0.0) {
                rule.nodes.push_back(scale * a);
                rule.weights.push_back(w);
            }
        }
    }
    return rule;
}

/// Cached rules: building one requires many density evaluations (some by
/// inversion quadrature), so identical (beta, c, n) requests share work.
inline const MixingRule& cached_mixing_rule(double beta, double c, int n_nodes) {
    struct Key {
        double beta, c;
        int n;
        bool operator<(const Key& o) const {
            if (beta != o.beta) return beta < o.beta;
            if (c != o.c) return c < o.c;
            return n < o.n;
        }
    };
    static std::map<Key, MixingRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto [it, inserted] = cache.try_emplace(Key{beta, c, n_nodes});
    if (inserted) it->second = bernstein_mixing_rule(beta, c, n_nodes);
    return it->second;
}

}  // namespace detail

}  // namespace sf
