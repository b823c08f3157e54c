#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/laws.hpp"
#include "schur_fourier/quadrature.hpp"
#include "schur_fourier/stable.hpp"

namespace sf {

// ---------------------------------------------------------------- condition

enum class Verdict { LogConvex, LogConcave, Affine, Neither, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::LogConvex: return "LogConvex";
        case Verdict::LogConcave: return "LogConcave";
        case Verdict::Affine: return "Affine";
        case Verdict::Neither: return "Neither";
        default: return "Indeterminate";
    }
}

struct ConditionVerdict {
    Verdict verdict = Verdict::Indeterminate;
    double max_convexity_violation = 0.0;  // how far the worst triple is from convexity
    double max_concavity_violation = 0.0;  // ... from concavity
    std::size_t grid_points = 0;
    std::size_t directions = 0;
    double q = 0.0;
};

/// Default audit grid: geometric, 1e-3 .. 1e3, 61 points.
inline std::vector<double> default_r_grid() {
    std::vector<double> r(61);
    for (int i = 0; i < 61; ++i) r[i] = std::pow(10.0, -3.0 + 6.0 * i / 60.0);
    return r;
}

/// Default directions: coordinate axes plus 8 seeded random unit vectors.
inline std::vector<std::vector<double>> default_directions(int dim, std::uint64_t seed = 2024) {
    std::vector<std::vector<double>> dirs;
    for (int i = 0; i < dim; ++i) {
        std::vector<double> e(dim, 0.0);
        e[i] = 1.0;
        dirs.push_back(std::move(e));
    }
    Rng rng(seed);
    for (int k = 0; k < 8; ++k) {
        std::vector<double> v(dim);
        double n2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            n2 += x * x;
        }
        const double n = std::sqrt(n2);
        for (auto& x : v) x /= n;
        dirs.push_back(std::move(v));
    }
    return dirs;
}

/// Classifies r -> log phi_hat(r^{1/q} t) on the grid by second divided
/// differences; per-triple tolerance is tol * max(1, |log cf| over the triple).
inline ConditionVerdict condition_check(const SymmetricLaw& law, double q,
                                        const std::vector<std::vector<double>>& directions,
                                        const std::vector<double>& r_grid, double tol = 1e-9) {
    if (!(q > 0.0)) throw Error("condition_check: q must be positive");
    if (r_grid.size() < 3) throw Error("condition_check: need at least 3 grid points");
    for (std::size_t i = 1; i < r_grid.size(); ++i)
        if (!(r_grid[i] > r_grid[i - 1] && r_grid[i - 1] > 0.0))
            throw Error("condition_check: r_grid must be positive and increasing");

    ConditionVerdict out;
    out.grid_points = r_grid.size();
    out.directions = directions.size();
    out.q = q;
    bool indeterminate = false;
    double worst_convex = 0.0;  // most negative convexity gap
    double worst_concave = 0.0;

    std::vector<double> scaled(law.dim());
    std::vector<double> logs(r_grid.size());
    for (const auto& t : directions) {
        if (static_cast<int>(t.size()) != law.dim())
            throw LengthMismatch("condition_check: direction dimension mismatch");
        for (std::size_t i = 0; i < r_grid.size(); ++i) {
            const double s = std::pow(r_grid[i], 1.0 / q);
            for (int k = 0; k < law.dim(); ++k) scaled[k] = s * t[k];
            if (!law.cf_positive()) {
                // no positivity guarantee: the raw value must be checked
                const double c = cf_eval(law, scaled);
                if (!(c > 0.0))
                    throw NonPositiveCf("condition_check: cf non-positive at a grid point "
                                        "(law outside the theorem's hypotheses)");
                logs[i] = std::log(c);
            } else {
                // underflow-safe: closed-form log for these families
                logs[i] = log_cf_eval(law, scaled);
            }
            if (!std::isfinite(logs[i])) indeterminate = true;
        }
        for (std::size_t i = 1; i + 1 < r_grid.size(); ++i) {
            const double lam = (r_grid[i + 1] - r_grid[i]) / (r_grid[i + 1] - r_grid[i - 1]);
            const double interp = lam * logs[i - 1] + (1.0 - lam) * logs[i + 1];
            if (!std::isfinite(interp) || !std::isfinite(logs[i])) continue;
            const double gap = interp - logs[i];  // >= 0 for convex
            const double scale = std::max({1.0, std::abs(logs[i - 1]), std::abs(logs[i]),
                                           std::abs(logs[i + 1])});
            const double normalized = gap / scale;
            worst_convex = std::min(worst_convex, normalized);
            worst_concave = std::max(worst_concave, normalized);
        }
    }
    out.max_convexity_violation = -worst_convex;
    out.max_concavity_violation = worst_concave;
    if (indeterminate) {
        out.verdict = Verdict::Indeterminate;
        return out;
    }
    const bool convex_ok = out.max_convexity_violation <= tol;
    const bool concave_ok = out.max_concavity_violation <= tol;
    if (convex_ok && concave_ok)
        out.verdict = Verdict::Affine;
    else if (convex_ok)
        out.verdict = Verdict::LogConvex;
    else if (concave_ok)
        out.verdict = Verdict::LogConcave;
    else
        out.verdict = Verdict::Neither;
    return out;
}

inline ConditionVerdict condition_check(const SymmetricLaw& law, double q, double tol = 1e-9) {
    return condition_check(law, q, default_directions(law.dim()), default_r_grid(), tol);
}

// ---------------------------------------------------------------- sections

namespace detail {

inline double vec_norm(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return std::sqrt(s);
}

struct ActiveFactors {
    std::vector<double> y;  // nonzero coefficients only
};

inline ActiveFactors active_factors(std::span<const double> y) {
    ActiveFactors a;
    for (double v : y)
        if (v != 0.0) a.y.push_back(v);
    if (a.y.empty()) throw Error("section: y must be nonzero");
    return a;
}

/// Section value when exactly one coefficient is active: the Fourier integral
/// collapses to a density evaluation, S(y,t) = (|y|/|y_j|)^d phi(t/y_j).
inline double single_factor_section(const SymmetricLaw& law, double y_norm, double yj,
                                    std::span<const double> t) {
    if (!law.has_density())
        throw NotIntegrable(
            "section: a single cf factor is not integrable and the law has no density");
    const int d = law.dim();
    std::vector<double> arg(t.begin(), t.end());
    for (auto& v : arg) v /= yj;
    return std::pow(y_norm / std::abs(yj), d) * density_eval(law, arg);
}

}  // namespace detail

/// Section of the n-fold product measure through the block subspace
/// {sum_k y_k x_k = t}:  S(y,t) = |y|^d int cos(2 pi <s,t>) prod_k cf(y_k s) ds.
inline double section_at(const SymmetricLaw& law, std::span<const double> y,
                         std::span<const double> t, const QuadratureSpec& spec = {}) {
    const int d = law.dim();
    if (static_cast<int>(t.size()) != d) throw LengthMismatch("section_at: t must lie in R^d");
    const auto active = detail::active_factors(y);
    const double y_norm = detail::vec_norm(y);

    if (active.y.size() == 1 && !law.cf_integrable())
        return detail::single_factor_section(law, y_norm, active.y[0], t);

    const double cf_rate = cf_oscillation_rate(law);
    double abs_y_sum = 0.0;
    for (double yk : active.y) abs_y_sum += std::abs(yk);

    const double t_norm = detail::vec_norm(t);
    if (d == 1) {
        const double rate = cf_rate * abs_y_sum + kTwoPi * std::abs(t[0]);
        auto f = [&](double s) {
            double prod = t_norm > 0.0 ? std::cos(kTwoPi * s * t[0]) : 1.0;
            for (double yk : active.y) prod *= cf_eval1(law, yk * s);
            return prod;
        };
        return y_norm * integrate_even_line(f, spec, rate);
    }

    // multivariate laws: radial reduction when available, else tensor grid
    const auto* gm = law.get_if<GaussianMixtureLaw>();
    const bool radial = law.get_if<GaussianLaw>() != nullptr ||
                        (gm != nullptr && !gm->sigma.empty()) ||
                        (law.get_if<ExpPowerLaw>() != nullptr &&
                         law.get_if<ExpPowerLaw>()->body.get_if<EuclideanBody>() != nullptr);
    if (radial && t_norm == 0.0) {
        const double dball =
            d * std::exp(0.5 * d * std::log(kPi) - std::lgamma(1.0 + 0.5 * d));
        std::vector<double> arg(d, 0.0);
        auto f = [&](double r) {
            double prod = std::pow(r, d - 1);
            for (double yk : active.y) {
                arg[0] = yk * r;
                prod *= cf_eval(law, arg);
            }
            return prod;
        };
        return std::pow(y_norm, d) * dball * integrate_halfline(f, spec, cf_rate * abs_y_sum);
    }
    if (d > 3) throw UnsupportedEvaluation("section: quadrature implemented for d <= 3");
    double t_max = 0.0;
    for (double v : t) t_max = std::max(t_max, std::abs(v));
    const double rate = cf_rate * abs_y_sum + kTwoPi * t_max;
    auto f = [&](const std::vector<double>& s) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += s[k] * t[k];
        double prod = std::cos(kTwoPi * dot);
        std::vector<double> arg(d);
        for (double yk : active.y) {
            for (int k = 0; k < d; ++k) arg[k] = yk * s[k];
            prod *= cf_eval(law, arg);
        }
        return prod;
    };
    return std::pow(y_norm, d) * integrate_box_even(f, d, spec, rate);
}

/// Central section S(y) = S(y, 0).
inline double section_zero(const SymmetricLaw& law, std::span<const double> y,
                           const QuadratureSpec& spec = {}) {
    std::vector<double> t(law.dim(), 0.0);
    return section_at(law, y, t, spec);
}

// ------------------------------------------------------ codim-k sections

/// Codimension-k central section of mu^n (law on R, d = 1):
///   int_{R^k} prod_m cf(<u^m, s>) ds,
/// where u^m is the m-th column of the k x n orthonormal frame.
inline double codim_section(const SymmetricLaw& law, const Eigen::MatrixXd& frame,
                            const QuadratureSpec& spec = {}) {
    if (law.dim() != 1) throw UnsupportedEvaluation("codim_section: law must be on R");
    const int k = static_cast<int>(frame.rows());
    const int n = static_cast<int>(frame.cols());
    if (k < 1 || k > 3) throw UnsupportedEvaluation("codim_section: k must be 1, 2 or 3");
    if (n < k) throw Error("codim_section: frame needs at least k columns");
    const Eigen::MatrixXd gram = frame * frame.transpose();
    if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10)
        throw FrameNotOrthonormal("codim_section: rows must be orthonormal to 1e-10");

    if (k == 1) {
        std::vector<double> y(n);
        for (int m = 0; m < n; ++m) y[m] = frame(0, m);
        // |y| = 1 for an orthonormal row, so this matches the section formula
        return section_zero(law, y, spec);
    }

    // drop zero columns (cf(0) = 1), try axis-separable structure first
    std::vector<Eigen::VectorXd> cols;
    for (int m = 0; m < n; ++m) {
        const Eigen::VectorXd c = frame.col(m);
        if (c.cwiseAbs().maxCoeff() > 0.0) cols.push_back(c);
    }
    bool separable = true;
    std::vector<std::vector<double>> per_axis(k);
    for (const auto& c : cols) {
        int nz = -1;
        for (int a = 0; a < k; ++a) {
            if (c[a] != 0.0) {
                if (nz >= 0) {
                    separable = false;
                    break;
                }
                nz = a;
            }
        }
        if (!separable) break;
        per_axis[nz].push_back(c[nz]);
    }
    const double cf_rate = cf_oscillation_rate(law);
    if (separable) {
        double prod = 1.0;
        for (int a = 0; a < k; ++a) {
            if (per_axis[a].empty())
                throw NotIntegrable("codim_section: an axis carries no cf factor");
            const auto active = detail::active_factors(per_axis[a]);
            if (active.y.size() == 1 && !law.cf_integrable()) {
                const double zero = 0.0;
                prod *= detail::single_factor_section(law, std::abs(active.y[0]), active.y[0],
                                                      std::span<const double>(&zero, 1)) /
                        std::abs(active.y[0]);
            } else {
                double rate = 0.0;
                for (double ym : active.y) rate += cf_rate * std::abs(ym);
                auto f = [&](double s) {
                    double v = 1.0;
                    for (double ym : active.y) v *= cf_eval1(law, ym * s);
                    return v;
                };
                prod *= integrate_even_line(f, spec, rate);
            }
        }
        return prod;
    }

    double rate = 0.0;
    for (const auto& c : cols) rate += cf_rate * c.norm();
    auto f = [&](const std::vector<double>& s) {
        double prod = 1.0;
        for (const auto& c : cols) {
            double dot = 0.0;
            for (int a = 0; a < k; ++a) dot += c[a] * s[a];
            prod *= cf_eval1(law, dot);
        }
        return prod;
    };
    return integrate_box_even(f, k, spec, rate);
}

// ------------------------------------- cf of exp(-||x||^p), discrete norms

namespace detail {

inline int mixing_nodes_for(std::size_t n_atoms) {
    if (n_atoms <= 1) return 640;
    if (n_atoms == 2) return 256;
    if (n_atoms == 3) return 128;
    if (n_atoms == 4) return 48;
    return 24;
}

struct DiscreteMixtureEval {
    const DiscreteLpBody* body;
    std::vector<const MixingRule*> rules;  // delta at c_j when p = 2
    std::vector<double> delta_nodes;       // used when p = 2

    /// Visits every node of the product rule with its weight and the matrix
    /// A_a = sum a_j u_j u_j'.
    template <class F>
    void sum(F&& f) const {
        const int d = body->dim;
        const std::size_t m = body->atoms.size();
        std::vector<std::size_t> idx(m, 0);
        Eigen::MatrixXd a_mat(d, d);
        for (;;) {
            double w = 1.0;
            a_mat.setZero();
            for (std::size_t j = 0; j < m; ++j) {
                const double aj = rules[j] ? rules[j]->nodes[idx[j]] : delta_nodes[j];
                if (rules[j]) w *= rules[j]->weights[idx[j]];
                Eigen::Map<const Eigen::VectorXd> u(body->atoms[j].u.data(), d);
                a_mat.noalias() += aj * (u * u.transpose());
            }
            f(w, a_mat);
            // odometer over the product grid
            std::size_t j = 0;
            for (; j < m; ++j) {
                const std::size_t len = rules[j] ? rules[j]->nodes.size() : 1;
                if (++idx[j] < len) break;
                idx[j] = 0;
            }
            if (j == m) break;
        }
    }
};

}  // namespace detail

/// Characteristic function of the normalized density c exp(-||x||_K^p) for a
/// DiscreteLp body K, via the Gaussian-mixture representation: each factor
/// exp(-c_j s^{p/2}) is a Laplace transform of a mixing measure realized by
/// detail::bernstein_mixing_rule, and the resulting Gaussians transform in
/// closed form. Exact (single atom per factor) when p = 2.
inline double cf_exp_power_discrete(const StarBody& body, double p, std::span<const double> t,
                                    const QuadratureSpec& spec = {}, int nodes_per_atom = 0) {
    (void)spec;
    const auto* lp = body.get_if<DiscreteLpBody>();
    if (!lp) throw UnsupportedBody("cf_exp_power_discrete: body must be DiscreteLp");
    if (!(p > 0.0 && p <= 2.0)) throw Error("cf_exp_power_discrete: p in (0,2] required");
    if (static_cast<int>(t.size()) != lp->dim)
        throw LengthMismatch("cf_exp_power_discrete: dimension mismatch");
    {
        const auto rep = isotropy_check(lp->atoms, lp->dim);
        if (!rep.ok)
            throw IsotropyViolated("cf_exp_power_discrete: atoms deviate from isotropy by " +
                                   std::to_string(rep.deviation));
    }
    const std::size_t m = lp->atoms.size();
    const int nodes = nodes_per_atom > 0 ? nodes_per_atom : detail::mixing_nodes_for(m);
    const double beta = 0.5 * p;

    detail::DiscreteMixtureEval eval;
    eval.body = lp;
    eval.rules.resize(m, nullptr);
    eval.delta_nodes.resize(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        if (p == 2.0)
            eval.delta_nodes[j] = lp->atoms[j].c;
        else
            eval.rules[j] = &detail::cached_mixing_rule(beta, lp->atoms[j].c, nodes);
    }

    Eigen::Map<const Eigen::VectorXd> tv(t.data(), t.size());
    double num = 0.0, den = 0.0;
    eval.sum([&](double w, const Eigen::MatrixXd& a_mat) {
        const double f0 = 1.0 / std::sqrt(a_mat.determinant());
        const Eigen::VectorXd sol = a_mat.llt().solve(tv);
        den += w * f0;
        num += w * f0 * std::exp(-kPi * kPi * tv.dot(sol));
    });
    if (!(den > 0.0) || !std::isfinite(num / den))
        throw QuadratureDiverged("cf_exp_power_discrete: mixture quadrature failed");
    return num / den;
}

/// Volume of the unit ball of a DiscreteLp norm, from
/// int exp(-||x||^p) dx = |K| Gamma(1 + d/p) and the mixture representation.
inline double discrete_lp_volume(const StarBody& body, int nodes_per_atom = 0) {
    const auto* lp = body.get_if<DiscreteLpBody>();
    if (!lp) throw UnsupportedBody("discrete_lp_volume: body must be DiscreteLp");
    const double p = lp->p;
    const std::size_t m = lp->atoms.size();
    const int nodes = nodes_per_atom > 0 ? nodes_per_atom : detail::mixing_nodes_for(m);
    detail::DiscreteMixtureEval eval;
    eval.body = lp;
    eval.rules.resize(m, nullptr);
    eval.delta_nodes.resize(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        if (p == 2.0)
            eval.delta_nodes[j] = lp->atoms[j].c;
        else
            eval.rules[j] = &detail::cached_mixing_rule(0.5 * p, lp->atoms[j].c, nodes);
    }
    double total = 0.0;
    eval.sum([&](double w, const Eigen::MatrixXd& a_mat) {
        total += w * std::pow(kPi, 0.5 * lp->dim) / std::sqrt(a_mat.determinant());
    });
    return total / std::exp(std::lgamma(1.0 + lp->dim / p));
}

// -------------------------------------------- block sections of B_p^n(K)

namespace detail {

/// exp-power laws share an expensive cf cache, so block-section evaluations
/// over a weight grid must reuse one law per (p, body) rather than
/// constructing one per call. Entries hold the body alive, which keeps the
/// identity pointer from being recycled.
inline SymmetricLaw cached_exp_power_law(double p, const StarBody& body) {
    struct Key {
        const void* body;
        double p;
        bool operator<(const Key& o) const {
            if (body != o.body) return body < o.body;
            return p < o.p;
        }
    };
    static std::map<Key, SymmetricLaw> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    const Key key{body.identity(), p};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, SymmetricLaw::exp_power(p, body)).first;
    return it->second;
}

}  // namespace detail

/// |B_p^n(K) cap H_theta| via the product-measure section:
/// Gamma(1 + (nd-d)/p) |section| = S_{mu^n}(theta) for the unnormalized
/// density exp(-||x||_K^p); the normalized law is rescaled accordingly.
inline double bpn_block_section(const StarBody& body, double p, std::span<const double> theta,
                                const QuadratureSpec& spec = {}) {
    const int d = body.dim();
    const int n = static_cast<int>(theta.size());
    if (n < 1) throw Error("bpn_block_section: theta must be nonempty");
    const SymmetricLaw law = detail::cached_exp_power_law(p, body);
    const double s = section_zero(law, theta, spec);
    double vol_k;
    if (body.get_if<DiscreteLpBody>())
        vol_k = discrete_lp_volume(body);
    else
        vol_k = body_volume(body);
    const double log_scale = n * (std::log(vol_k) + std::lgamma(1.0 + d / p)) -
                             std::lgamma(1.0 + (static_cast<double>(n) * d - d) / p);
    return s * std::exp(log_scale);
}

}  // namespace sf
