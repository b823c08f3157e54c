#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/parallel.hpp"
#include "schur_fourier/rng.hpp"

namespace sf {

/// Controls for the truncated adaptive quadrature used on cf products.
/// Truncation rule: extend the domain in dyadic blocks until both the block
/// contribution falls below rel_tol (twice in a row) and the integrand
/// envelope on the last block falls below tail_eps. Each block is refined
/// adaptively (Gauss-Kronrod 7/15 bisection).
struct QuadratureSpec {
    double tail_eps = 1e-12;
    double rel_tol = 1e-9;
    int max_levels = 48;
    double initial_radius = 8.0;

    void validate() const {
        if (!(tail_eps > 0.0 && tail_eps < 1.0)) throw Error("QuadratureSpec: tail_eps must be in (0,1)");
        if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw Error("QuadratureSpec: rel_tol must be in (0,1)");
        if (max_levels < 1) throw Error("QuadratureSpec: max_levels must be >= 1");
        if (!(initial_radius > 0.0)) throw Error("QuadratureSpec: initial_radius must be positive");
    }
};

namespace detail {

// Gauss-Kronrod 7/15 on [-1,1]: Kronrod nodes (odd entries are the Gauss-7 nodes).
inline constexpr double kGk15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double kGk15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kG7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

struct PanelEstimate {
    double value = 0.0;    // Kronrod value
    double err = 0.0;      // |K15 - G7| based estimate
    double abs_value = 0.0;  // Kronrod estimate of integral of |f|
    double max_abs = 0.0;    // max |f| over the nodes
};

template <class F>
PanelEstimate gk15(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double k15 = 0.0, g7 = 0.0, habs = 0.0, mx = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double y = f(mid + half * kGk15Nodes[i]);
        k15 += kGk15Weights[i] * y;
        habs += kGk15Weights[i] * std::abs(y);
        if (i % 2 == 1) g7 += kG7Weights[i / 2] * y;
        mx = std::max(mx, std::abs(y));
    }
    PanelEstimate r;
    r.value = half * k15;
    r.abs_value = half * habs;
    const double diff = half * std::abs(k15 - g7);
    // standard QUADPACK-style error sharpening
    r.err = diff * std::sqrt(std::min(1.0, 200.0 * diff / std::max(r.abs_value, 1e-300)));
    if (!(r.err >= 0.0)) r.err = diff;
    r.max_abs = mx;
    return r;
}

struct IntervalResult {
    double value = 0.0;
    double err = 0.0;
    double abs_value = 0.0;
    double max_abs = 0.0;
    bool converged = true;
};

/// Adaptive GK bisection on [a,b] down to abs_tol, with an interval budget.
/// The final sum runs over intervals ordered by position (pairwise), so the
/// result does not depend on the order in which intervals were refined.
template <class F>
IntervalResult adapt_interval(const F& f, double a, double b, double abs_tol,
                              std::size_t max_intervals = 400000,
                              double rel_floor = 1e-13,
                              double max_panel = std::numeric_limits<double>::infinity()) {
    struct Node {
        double a, b, value, err, abs_value, max_abs;
    };
    auto cmp = [](const Node& x, const Node& y) {
        if (x.err != y.err) return x.err < y.err;
        return x.a > y.a;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    std::vector<Node> done;

    // a panel much wider than the integrand's oscillation period can alias
    // both rules of the pair and defeat the error estimate, so callers that
    // know the top frequency cap the seed panels
    std::size_t n_seed = 1;
    if (std::isfinite(max_panel) && max_panel > 0.0 && b - a > max_panel) {
        n_seed = std::min<std::size_t>(max_intervals / 2,
                                       static_cast<std::size_t>((b - a) / max_panel) + 1);
    }
    double total_err = 0.0, total_abs = 0.0;
    for (std::size_t s = 0; s < n_seed; ++s) {
        const double pa = a + (b - a) * static_cast<double>(s) / n_seed;
        const double pb = a + (b - a) * static_cast<double>(s + 1) / n_seed;
        PanelEstimate e0 = gk15(f, pa, pb);
        if (!std::isfinite(e0.value)) throw NonFinite("quadrature: non-finite integrand");
        heap.push({pa, pb, e0.value, e0.err, e0.abs_value, e0.max_abs});
        total_err += e0.err;
        total_abs += e0.abs_value;
    }
    std::size_t used = n_seed;

    auto tol_now = [&] { return std::max(abs_tol, rel_floor * total_abs); };

    while (total_err > tol_now() && !heap.empty()) {
        if (used >= max_intervals) break;
        Node worst = heap.top();
        heap.pop();
        if (worst.err <= tol_now() / (8.0 * static_cast<double>(used + heap.size() + 1))) {
            done.push_back(worst);
            continue;
        }
        const double m = 0.5 * (worst.a + worst.b);
        if (!(worst.a < m && m < worst.b)) {  // interval at floating resolution
            done.push_back(worst);
            continue;
        }
        PanelEstimate l = gk15(f, worst.a, m);
        PanelEstimate r = gk15(f, m, worst.b);
        if (!std::isfinite(l.value) || !std::isfinite(r.value))
            throw NonFinite("quadrature: non-finite integrand");
        total_err += l.err + r.err - worst.err;
        total_abs += l.abs_value + r.abs_value - worst.abs_value;
        heap.push({worst.a, m, l.value, l.err, l.abs_value, l.max_abs});
        heap.push({m, worst.b, r.value, r.err, r.abs_value, r.max_abs});
        ++used;
    }

    while (!heap.empty()) {
        done.push_back(heap.top());
        heap.pop();
    }
    std::sort(done.begin(), done.end(), [](const Node& x, const Node& y) { return x.a < y.a; });

    std::vector<double> values, errs, absv;
    values.reserve(done.size());
    double mx = 0.0;
    for (const Node& n : done) {
        values.push_back(n.value);
        errs.push_back(n.err);
        absv.push_back(n.abs_value);
        mx = std::max(mx, n.max_abs);
    }
    IntervalResult res;
    res.value = pairwise_sum(values);
    res.err = pairwise_sum(errs);
    res.abs_value = pairwise_sum(absv);
    res.max_abs = mx;
    res.converged =
        res.err <= std::max(abs_tol, rel_floor * res.abs_value) * 1.0001 || res.err <= 1e-14 * res.abs_value;
    return res;
}

}  // namespace detail

/// Integral of f over [0, +inf) for a decaying (possibly oscillatory)
/// integrand: dyadic block extension with per-block adaptive refinement.
/// `osc_rate` is an upper bound on the integrand's angular frequency; it caps
/// panel widths so trigonometric components cannot alias the error estimate.
template <class F>
double integrate_halfline(const F& f, const QuadratureSpec& spec, double osc_rate = 0.0) {
    spec.validate();
    const double max_panel =
        osc_rate > 0.0 ? 0.25 * kTwoPi / osc_rate : std::numeric_limits<double>::infinity();
    double lo = 0.0, hi = spec.initial_radius;
    double total = 0.0, abs_scale = 0.0;
    int small_blocks = 0;
    bool tail_ok = false;
    for (int level = 0; level < spec.max_levels; ++level) {
        double scale = abs_scale;
        if (scale == 0.0) scale = detail::gk15(f, lo, hi).abs_value;  // rough first-block scale
        const double tol = spec.rel_tol * std::max(scale, 1e-300) / 4.0;
        detail::IntervalResult blk =
            detail::adapt_interval(f, lo, hi, std::max(tol, 1e-300), 400000,
                                   std::min(1e-13, spec.rel_tol / 16.0), max_panel);
        if (!blk.converged && blk.err > spec.rel_tol * std::max(std::abs(total) + std::abs(blk.value), blk.abs_value))
            throw QuadratureDiverged("quadrature: block refinement failed on [" +
                                     std::to_string(lo) + "," + std::to_string(hi) + "]");
        total += blk.value;
        abs_scale += blk.abs_value;
        const double block_floor = spec.rel_tol * std::max(std::abs(total), 1e-300);
        small_blocks = (std::abs(blk.value) <= block_floor && blk.abs_value <= std::sqrt(spec.rel_tol) * std::max(abs_scale, 1e-300))
                           ? small_blocks + 1
                           : 0;
        tail_ok = blk.max_abs <= spec.tail_eps;
        if (small_blocks >= 2 && tail_ok) return total;
        lo = hi;
        hi *= 2.0;
    }
    if (!tail_ok)
        throw NotIntegrable("quadrature: integrand envelope never fell below tail_eps");
    return total;
}

/// Integral of an even function over the whole line.
template <class F>
double integrate_even_line(const F& f, const QuadratureSpec& spec, double osc_rate = 0.0) {
    return 2.0 * integrate_halfline(f, spec, osc_rate);
}

/// Integral over the whole line without symmetry assumptions.
template <class F>
double integrate_line(const F& f, const QuadratureSpec& spec, double osc_rate = 0.0) {
    const double pos = integrate_halfline(f, spec, osc_rate);
    const double neg = integrate_halfline([&f](double s) { return f(-s); }, spec, osc_rate);
    return pos + neg;
}

/// Integral over R^k (k = 1,2,3) of a globally even integrand
/// (f(-s) = f(s)). Iterated adaptive quadrature; inner integrals run at a
/// tightened tolerance so the outer error estimate stays meaningful.
inline double integrate_box_even(const std::function<double(const std::vector<double>&)>& f,
                                 int k, const QuadratureSpec& spec, double osc_rate = 0.0) {
    if (k < 1 || k > 3) throw UnsupportedEvaluation("integrate_box_even: k must be 1, 2 or 3");
    if (k == 1) {
        return integrate_even_line([&f](double s) { return f({s}); }, spec, osc_rate);
    }
    QuadratureSpec inner = spec;
    inner.rel_tol = std::max(spec.rel_tol / 8.0, 1e-13);
    if (k == 2) {
        auto outer = [&](double s1) {
            return integrate_line([&](double s2) { return f({s1, s2}); }, inner, osc_rate);
        };
        return integrate_even_line(outer, spec, osc_rate);
    }
    QuadratureSpec inner2 = inner;
    inner2.rel_tol = std::max(spec.rel_tol / 32.0, 1e-13);
    auto outer = [&](double s1) {
        auto mid = [&](double s2) {
            return integrate_line([&](double s3) { return f({s1, s2, s3}); }, inner2, osc_rate);
        };
        return integrate_line(mid, inner, osc_rate);
    };
    return integrate_even_line(outer, spec, osc_rate);
}

}  // namespace sf
