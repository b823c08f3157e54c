#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/rng.hpp"

namespace sf {

/// x majorized by y: sorted prefix sums of x never exceed those of y and the
/// totals agree (to 1e-12 relative).
inline bool majorizes(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("majorizes: length mismatch");
    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::sort(xs.begin(), xs.end(), std::greater<>());
    std::sort(ys.begin(), ys.end(), std::greater<>());
    double sx = 0.0, sy = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < xs.size(); ++i) scale = std::max({scale, std::abs(xs[i]), std::abs(ys[i])});
    const double tol = 1e-12 * scale * static_cast<double>(xs.size());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        if (sx > sy + tol) return false;
    }
    sx += xs.back();
    sy += ys.back();
    return std::abs(sx - sy) <= tol;
}

struct MajorizationPair {
    std::vector<double> x;  // majorized (more mixed)
    std::vector<double> y;  // majorizing (more spread out)
};

namespace detail {

/// Depth-first construction of a T-transform chain. Every step freezes one
/// coordinate at its target value; a step is admitted only if the frozen
/// coordinate's target lies between the two mixed entries and the unfrozen
/// remainder still majorizes its target. A frozen-coordinate step order does
/// not always exist greedily, so failed branches backtrack; in practice the
/// search visits only a handful of nodes.
struct ChainSearch {
    std::span<const double> x;
    std::size_t n;
    double eps;
    long nodes = 0;
    std::vector<std::vector<double>> chain;

    bool invariant(const std::vector<double>& v, const std::vector<bool>& fixed) const {
        std::vector<double> xs, vs;
        for (std::size_t i = 0; i < n; ++i)
            if (!fixed[i]) {
                xs.push_back(x[i]);
                vs.push_back(v[i]);
            }
        if (xs.empty()) return true;
        return majorizes(xs, vs);
    }

    bool solve(std::vector<double> v, std::vector<bool> fixed, std::size_t steps_left) {
        if (++nodes > 1000000) return false;
        bool all = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (!fixed[i]) {
                if (std::abs(v[i] - x[i]) <= eps)
                    fixed[i] = true;
                else
                    all = false;
            }
        }
        if (all) return true;
        if (steps_left == 0) return false;
        for (std::size_t c = 0; c < n; ++c) {
            if (fixed[c] || std::abs(v[c] - x[c]) <= eps) continue;
            for (std::size_t a = 0; a < n; ++a) {
                if (a == c || fixed[a]) continue;
                const double lo = std::min(v[c], v[a]), hi = std::max(v[c], v[a]);
                if (x[c] < lo - eps || x[c] > hi + eps) continue;
                std::vector<double> v2 = v;
                v2[a] += v2[c] - x[c];
                v2[c] = x[c];
                std::vector<bool> f2 = fixed;
                f2[c] = true;
                if (!invariant(v2, f2)) continue;
                chain.push_back(v2);
                if (solve(std::move(v2), std::move(f2), steps_left - 1)) return true;
                chain.pop_back();
            }
        }
        return false;
    }
};

}  // namespace detail

/// T-transform chain y = v_0, ..., v_m = x with m <= n-1 steps, each a convex
/// mix of two coordinates; every consecutive pair satisfies v_{i+1} < v_i.
inline std::vector<std::vector<double>> t_transform_chain(std::span<const double> x,
                                                          std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("t_transform_chain: length mismatch");
    if (!majorizes(x, y)) throw NotComparable("t_transform_chain: x is not majorized by y");
    const std::size_t n = x.size();
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(y[i]));
    detail::ChainSearch search{x, n, 1e-13 * scale};
    std::vector<bool> fixed(n, false);
    if (!search.solve(std::vector<double>(y.begin(), y.end()), std::move(fixed), n - 1))
        throw NotComparable("t_transform_chain: could not realize the pair within n-1 steps");
    if (!search.chain.empty()) search.chain.back() = std::vector<double>(x.begin(), x.end());
    return search.chain;
}

/// Random pair x < y on the simplex: y ~ Dirichlet(1), x by 1-3 random
/// T-transforms. A quarter of the draws are pushed toward a vertex and a
/// quarter toward the barycenter, where the extremal claims live.
inline MajorizationPair random_comparable_pair(int n, std::uint64_t seed) {
    if (n < 2) throw Error("random_comparable_pair: n >= 2 required");
    Rng rng(seed);
    std::vector<double> y(n);
    double s = 0.0;
    for (auto& v : y) {
        v = rng.exponential();
        s += v;
    }
    for (auto& v : y) v /= s;

    const double mode = rng.u01();
    if (mode < 0.25) {
        // near a vertex
        const std::size_t j = static_cast<std::size_t>(rng.u01() * n) % n;
        const double eps = 0.02 + 0.08 * rng.u01();
        for (int i = 0; i < n; ++i) y[i] = y[i] * eps + (static_cast<int>(j) == i ? 1.0 - eps : 0.0);
    }

    std::vector<double> x = y;
    int transforms = 1 + static_cast<int>(rng.u01() * 3.0);
    if (mode >= 0.25 && mode < 0.5) transforms = 6 * n;  // near the barycenter
    for (int t = 0; t < transforms; ++t) {
        std::size_t i = static_cast<std::size_t>(rng.u01() * n) % n;
        std::size_t j = static_cast<std::size_t>(rng.u01() * n) % n;
        if (i == j) continue;
        const double lam = 0.5 * rng.u01();  // mixing toward the mean of the pair
        const double xi = x[i], xj = x[j];
        x[i] = (1.0 - lam) * xi + lam * xj;
        x[j] = lam * xi + (1.0 - lam) * xj;
    }
    return {std::move(x), std::move(y)};
}

struct SchurOstrowskiReport {
    bool ok = true;
    double worst_violation = 0.0;  // most negative signed value of the test quantity
    int worst_i = -1, worst_j = -1;
};

/// Schur-Ostrowski criterion at a point: (x_i - x_j)(d_i f - d_j f) >= 0 for
/// Schur convexity (reversed for concavity), partials by central differences.
inline SchurOstrowskiReport schur_ostrowski_check(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double fd_step = 0.0, double tol = 1e-9, bool concave = false) {
    const std::size_t n = point.size();
    if (n < 2) throw Error("schur_ostrowski_check: need n >= 2");
    double mx = 0.0;
    for (double v : point) mx = std::max(mx, std::abs(v));
    const double h = fd_step > 0.0 ? fd_step : 1e-5 * std::max(1.0, mx);

    std::vector<double> grad(n), work(point.begin(), point.end());
    for (std::size_t i = 0; i < n; ++i) {
        work[i] = point[i] + h;
        const double up = f(work);
        work[i] = point[i] - h;
        const double dn = f(work);
        work[i] = point[i];
        if (!std::isfinite(up) || !std::isfinite(dn))
            throw NonFinite("schur_ostrowski_check: non-finite f evaluation");
        grad[i] = (up - dn) / (2.0 * h);
    }
    SchurOstrowskiReport rep;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = (point[i] - point[j]) * (grad[i] - grad[j]);
            if (concave) v = -v;
            if (v < rep.worst_violation) {
                rep.worst_violation = v;
                rep.worst_i = static_cast<int>(i);
                rep.worst_j = static_cast<int>(j);
            }
        }
    }
    rep.ok = rep.worst_violation >= -tol;
    return rep;
}

enum class SchurMode { Convex, Concave };

struct SchurTestReport {
    SchurMode mode = SchurMode::Convex;
    int trials = 0;
    int violations = 0;
    double max_gap = 0.0;          // worst violation beyond tol
    double value_barycenter = 0.0;
    double value_vertex = 0.0;
    bool ok = true;
};

/// Evaluates f on seeded comparable pairs; convex mode requires
/// f(x) <= f(y) + tol whenever x < y. Also reports the extremal scan.
inline SchurTestReport test_schur(const std::function<double(std::span<const double>)>& f, int n,
                                  int trials, double tol, std::uint64_t seed, SchurMode mode) {
    SchurTestReport rep;
    rep.mode = mode;
    rep.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const auto pair = random_comparable_pair(n, splitmix64(seed + 1000003ULL * t));
        const double fx = f(pair.x), fy = f(pair.y);
        if (!std::isfinite(fx) || !std::isfinite(fy))
            throw NonFinite("test_schur: non-finite f evaluation");
        const double gap = mode == SchurMode::Convex ? fx - fy : fy - fx;
        if (gap > tol) {
            ++rep.violations;
            rep.max_gap = std::max(rep.max_gap, gap);
        }
    }
    std::vector<double> bary(n, 1.0 / n), vertex(n, 0.0);
    vertex[0] = 1.0;
    rep.value_barycenter = f(bary);
    rep.value_vertex = f(vertex);
    rep.ok = rep.violations == 0;
    return rep;
}

struct LogConvexityReport {
    int pairs = 0;
    int violations = 0;
    double max_gap = 0.0;  // worst multiplicative violation of the midpoint inequality
    bool ok = true;
};

/// Midpoint log-convexity: f((a+b)/2)^2 <= f(a) f(b) (1 + tol) on each pair.
inline LogConvexityReport test_log_convex_midpoint(
    const std::function<double(std::span<const double>)>& f,
    const std::vector<MajorizationPair>& pairs, double tol) {
    LogConvexityReport rep;
    rep.pairs = static_cast<int>(pairs.size());
    for (const auto& pr : pairs) {
        if (pr.x.size() != pr.y.size()) throw LengthMismatch("test_log_convex_midpoint: pair mismatch");
        std::vector<double> mid(pr.x.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (pr.x[i] + pr.y[i]);
        const double fa = f(pr.x), fb = f(pr.y), fm = f(mid);
        if (!(fa > 0.0) || !(fb > 0.0) || !(fm > 0.0))
            throw NonPositiveValue("test_log_convex_midpoint: f must be positive");
        const double ratio = fm * fm / (fa * fb);
        if (ratio > 1.0 + tol) {
            ++rep.violations;
            rep.max_gap = std::max(rep.max_gap, ratio - 1.0);
        }
    }
    rep.ok = rep.violations == 0;
    return rep;
}

}  // namespace sf
