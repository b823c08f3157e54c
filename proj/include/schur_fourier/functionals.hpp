#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/fourier.hpp"
#include "schur_fourier/geometry.hpp"
#include "schur_fourier/laws.hpp"
#include "schur_fourier/parallel.hpp"
#include "schur_fourier/rng.hpp"
#include "schur_fourier/schur.hpp"

namespace sf {

struct WeightVector {
    std::vector<double> a;
    bool simplex = false;

    static WeightVector from(std::vector<double> a) {
        WeightVector w;
        double s = 0.0;
        for (double v : a) {
            if (!(v >= 0.0)) throw Error("WeightVector: entries must be nonnegative");
            s += v;
        }
        w.simplex = std::abs(s - 1.0) <= 1e-12;
        w.a = std::move(a);
        return w;
    }
};

/// Discrete nu with h = nu_hat: h(x) = sum_j w_j cos(2 pi <x, s_j>); the atom
/// set is treated as symmetrized, which leaves H unchanged (cf is even).
struct SpectralMeasure {
    std::vector<double> w;
    std::vector<std::vector<double>> s;  // atoms in R^d

    static SpectralMeasure from(std::vector<double> w, std::vector<std::vector<double>> s) {
        if (w.size() != s.size() || w.empty()) throw Error("SpectralMeasure: malformed atoms");
        for (double v : w)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw Error("SpectralMeasure: weights must be finite and nonnegative");
        return {std::move(w), std::move(s)};
    }

    double h(std::span<const double> x) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) dot += x[k] * s[j][k];
            acc += w[j] * std::cos(kTwoPi * dot);
        }
        return acc;
    }
};

struct McEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    int n_blocks = 1;  // 1 = plain mean, >1 = median of means
    std::uint64_t seed = 0;
    bool unstable = false;  // negative-moment block spread exceeded threshold
};

// ------------------------------------------------------------ Bochner route

/// H(a) = int prod_i cf(a_i^{1/q} s) d nu(s), exact for discrete nu.
inline double h_functional_bochner(const SymmetricLaw& law, const SpectralMeasure& nu,
                                   std::span<const double> a, double q) {
    if (!(q > 0.0)) throw Error("h_functional_bochner: q must be positive");
    const int d = law.dim();
    std::vector<double> arg(d);
    double acc = 0.0;
    for (std::size_t j = 0; j < nu.w.size(); ++j) {
        if (static_cast<int>(nu.s[j].size()) != d)
            throw LengthMismatch("h_functional_bochner: atom dimension mismatch");
        double prod = 1.0;
        for (double ai : a) {
            if (!(ai >= 0.0)) throw Error("h_functional_bochner: weights must be nonnegative");
            const double r = std::pow(ai, 1.0 / q);
            for (int k = 0; k < d; ++k) arg[k] = r * nu.s[j][k];
            prod *= cf_eval(law, arg);
            if (prod == 0.0) break;
        }
        acc += nu.w[j] * prod;
    }
    return acc;
}

// ------------------------------------------------------------ MC machinery

namespace detail {

inline constexpr std::size_t kMcChunk = 16384;

/// Streams N evaluations of a statistic of S = sum_i a_i^{1/q} X_i and
/// accumulates per-chunk sums; reduction is per-chunk in index order.
template <class Stat>
void mc_accumulate(const SymmetricLaw& law, std::span<const double> a, double q,
                   std::uint64_t seed, std::size_t n, const Stat& stat,
                   std::vector<double>& chunk_sums, std::vector<double>& chunk_sq,
                   std::vector<std::size_t>& chunk_cnt) {
    const int d = law.dim();
    const std::size_t n_sum = a.size();
    std::vector<double> coef(n_sum);
    for (std::size_t i = 0; i < n_sum; ++i) {
        if (!(a[i] >= 0.0)) throw Error("mc: weights must be nonnegative");
        coef[i] = std::pow(a[i], 1.0 / q);
    }
    // chunk size shrinks with n so median-of-means always sees enough
    // chunks to fill its blocks (chunking is a function of n alone)
    const std::size_t chunk = std::clamp<std::size_t>(n / 64, 1, kMcChunk);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    chunk_sums.assign(n_chunks, 0.0);
    chunk_sq.assign(n_chunks, 0.0);
    chunk_cnt.assign(n_chunks, 0);
    auto drawer = make_drawer(law);
    parallel_for_chunks(n_chunks, [&](std::size_t c) {
        Rng rng(chunk_seed(seed, c));
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        std::vector<double> x(d), s(d);
        double acc = 0.0, acc2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            std::fill(s.begin(), s.end(), 0.0);
            for (std::size_t k = 0; k < n_sum; ++k) {
                drawer(rng, x);
                for (int j = 0; j < d; ++j) s[j] += coef[k] * x[j];
            }
            const double v = stat(std::span<const double>(s.data(), s.size()));
            acc += v;
            acc2 += v * v;
        }
        chunk_sums[c] = acc;
        chunk_sq[c] = acc2;
        chunk_cnt[c] = end - begin;
    });
}

inline McEstimate mc_mean(const SymmetricLaw& law, std::span<const double> a, double q,
                          std::uint64_t seed, std::size_t n,
                          const std::function<double(std::span<const double>)>& stat) {
    std::vector<double> sums, sqs;
    std::vector<std::size_t> cnts;
    mc_accumulate(law, a, q, seed, n, stat, sums, sqs, cnts);
    const double total = pairwise_sum(sums);
    const double total_sq = pairwise_sum(sqs);
    McEstimate est;
    est.n_samples = n;
    est.seed = seed;
    est.estimate = total / static_cast<double>(n);
    const double var =
        std::max(0.0, total_sq / static_cast<double>(n) - est.estimate * est.estimate);
    est.stderr_ = std::sqrt(var / static_cast<double>(n));
    return est;
}

/// Median of means over fixed contiguous blocks; stderr from the MAD of the
/// block means (1.4826 MAD / sqrt(B)).
inline McEstimate mc_median_of_means(const SymmetricLaw& law, std::span<const double> a, double q,
                                     std::uint64_t seed, std::size_t n,
                                     const std::function<double(std::span<const double>)>& stat,
                                     int n_blocks) {
    std::vector<double> sums, sqs;
    std::vector<std::size_t> cnts;
    mc_accumulate(law, a, q, seed, n, stat, sums, sqs, cnts);
    const std::size_t n_chunks = sums.size();
    const int blocks = std::max(1, std::min<int>(n_blocks, static_cast<int>(n_chunks)));
    std::vector<double> block_mean(blocks, 0.0);
    std::vector<std::size_t> block_n(blocks, 0);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        const int b = static_cast<int>(c * blocks / n_chunks);
        block_mean[b] += sums[c];
        block_n[b] += cnts[c];
    }
    for (int b = 0; b < blocks; ++b)
        block_mean[b] /= std::max<std::size_t>(1, block_n[b]);
    std::vector<double> sorted = block_mean;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[sorted.size() / 2];
    std::vector<double> dev(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) dev[i] = std::abs(sorted[i] - med);
    std::sort(dev.begin(), dev.end());
    const double mad = dev[dev.size() / 2];
    McEstimate est;
    est.n_samples = n;
    est.seed = seed;
    est.n_blocks = blocks;
    est.estimate = med;
    est.stderr_ = 1.4826 * mad / std::sqrt(static_cast<double>(blocks));
    est.unstable = mad > 0.25 * std::abs(med);
    return est;
}

}  // namespace detail

/// Monte-Carlo H(a) = E h(sum_i a_i^{1/q} X_i); h even, bounded or integrable.
inline McEstimate h_functional_mc(const SymmetricLaw& law,
                                  const std::function<double(std::span<const double>)>& h,
                                  std::span<const double> a, double q, std::uint64_t seed,
                                  std::size_t n) {
    if (!(q > 0.0)) throw Error("h_functional_mc: q must be positive");
    return detail::mc_mean(law, a, q, seed, n, h);
}

/// E ||sum_i a_i^{1/q} X_i||_body^p; median-of-means with 32 blocks when p<0.
/// Flags the estimate unstable when p <= -d/2 and the block spread is large.
inline McEstimate moment_mc(const SymmetricLaw& law, std::span<const double> a, double q, double p,
                            const StarBody& body, std::uint64_t seed, std::size_t n) {
    if (!(q > 0.0)) throw Error("moment_mc: q must be positive");
    if (body.dim() != law.dim()) throw LengthMismatch("moment_mc: body and law dimensions differ");
    if (!(p > -static_cast<double>(law.dim())))
        throw DivergentMoment("moment_mc: need p > -d");
    auto stat = [&body, p](std::span<const double> s) {
        return std::pow(norm_eval(body, s), p);
    };
    if (p >= 0.0) return detail::mc_mean(law, a, q, seed, n, stat);
    McEstimate est = detail::mc_median_of_means(law, a, q, seed, n, stat, 32);
    est.unstable = est.unstable && p <= -0.5 * law.dim();
    return est;
}

/// E exp(-lambda |sum_i a_i^{1/q} X_i|^p), p in (0,2], lambda > 0.
inline McEstimate laplace_mc(const SymmetricLaw& law, std::span<const double> a, double q, double p,
                             double lambda, std::uint64_t seed, std::size_t n) {
    if (!(p > 0.0 && p <= 2.0)) throw Error("laplace_mc: p in (0,2] required");
    if (!(lambda > 0.0)) throw Error("laplace_mc: lambda must be positive");
    auto stat = [p, lambda](std::span<const double> s) {
        double n2 = 0.0;
        for (double v : s) n2 += v * v;
        return std::exp(-lambda * std::pow(n2, 0.5 * p));
    };
    return detail::mc_mean(law, a, q, seed, n, stat);
}

// ---------------------------------------------- negative-moment probe

struct NegMomentPairResult {
    std::vector<double> a, b;
    McEstimate at_a, at_b, at_mid;
    double gap = 0.0;        // M(mid) - sqrt(M(a) M(b)), positive = violation direction
    double gap_stderr = 0.0;
    bool violated = false;   // gap exceeds 4 stderr
};

struct NegMomentReport {
    std::vector<NegMomentPairResult> pairs;
    int violations = 0;
    bool any_unstable = false;
};

/// Midpoint log-convexity probe for M(a) = E ||sum_i sqrt(a_i) X_i||^{-l}
/// against pairs of weight vectors; supported bodies are those with known
/// embeddings (Euclidean/Ellipsoid always; WeightedLq with q in (0,2]).
inline NegMomentReport neg_moment_logconvexity_probe(
    const SymmetricLaw& law, const StarBody& body, double l,
    const std::vector<MajorizationPair>& pairs, std::uint64_t seed, std::size_t n, double q = 2.0) {
    const int d = law.dim();
    if (!(l > 0.0 && l < d)) throw DivergentMoment("neg_moment probe: need l in (0, d)");
    if (const auto* wq = body.get_if<WeightedLqBody>()) {
        if (!(wq->q <= 2.0))
            throw UnsupportedBody("neg_moment probe: WeightedLq bodies need q in (0,2]");
    } else if (!body.get_if<EuclideanBody>() && !body.get_if<EllipsoidBody>()) {
        throw UnsupportedBody("neg_moment probe: body must embed in L_{-l} "
                              "(Euclidean, Ellipsoid or WeightedLq with q <= 2)");
    }
    NegMomentReport rep;
    std::uint64_t k = 0;
    for (const auto& pr : pairs) {
        NegMomentPairResult row;
        row.a = pr.x;
        row.b = pr.y;
        std::vector<double> mid(pr.x.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (pr.x[i] + pr.y[i]);
        row.at_a = moment_mc(law, row.a, q, -l, body, splitmix64(seed + 3 * k), n);
        row.at_b = moment_mc(law, row.b, q, -l, body, splitmix64(seed + 3 * k + 1), n);
        row.at_mid = moment_mc(law, mid, q, -l, body, splitmix64(seed + 3 * k + 2), n);
        ++k;
        const double g = std::sqrt(row.at_a.estimate * row.at_b.estimate);
        row.gap = row.at_mid.estimate - g;
        const double rel_a = row.at_a.stderr_ / row.at_a.estimate;
        const double rel_b = row.at_b.stderr_ / row.at_b.estimate;
        const double sg = 0.5 * g * std::sqrt(rel_a * rel_a + rel_b * rel_b);
        row.gap_stderr = std::sqrt(row.at_mid.stderr_ * row.at_mid.stderr_ + sg * sg);
        row.violated = row.gap > 4.0 * row.gap_stderr;
        rep.violations += row.violated ? 1 : 0;
        rep.any_unstable = rep.any_unstable || row.at_a.unstable || row.at_b.unstable ||
                           row.at_mid.unstable;
        rep.pairs.push_back(std::move(row));
    }
    return rep;
}

// ------------------------------------------------------------- Khinchin

struct KhinchinConstants {
    double c_gauss = 0.0;  // ||Z||_p / ||X||_2 with Var Z = Var X
    double c_self = 0.0;   // ||X||_p / ||X||_2
};

inline KhinchinConstants khinchin_constants(const SymmetricLaw& law, double p) {
    if (law.dim() != 1) throw UnsupportedEvaluation("khinchin_constants: law must be on R");
    if (!(p > -1.0 && p <= 2.0) || p == 0.0)
        throw Error("khinchin_constants: p in (-1,0) or (0,2] required");
    const double m2 = abs_moment(law, 2.0);
    const double mp = abs_moment(law, p);
    KhinchinConstants k;
    // ||Z||_p/||X||_2 is scale-free: the p-norm of a standard Gaussian
    k.c_gauss = std::pow(detail::gaussian_abs_moment(1, 1.0, p), 1.0 / p);
    k.c_self = std::pow(mp, 1.0 / p) / std::sqrt(m2);
    return k;
}

struct KhinchinTrial {
    std::vector<double> theta;
    double norm_p = 0.0;      // (E|S|^p)^{1/p} estimate
    double norm_p_stderr = 0.0;
    double slack_lower = 0.0;  // norm_p - lower bound
    double slack_upper = 0.0;  // upper bound - norm_p
    bool violated = false;
};

struct KhinchinReport {
    Verdict verdict = Verdict::Indeterminate;
    KhinchinConstants constants;
    double sigma = 0.0;  // ||X||_2
    std::vector<KhinchinTrial> trials;
    int violations = 0;
    double worst_slack = 0.0;  // most negative slack seen
    KhinchinTrial uniform_trial;  // theta = (1,...,1)/sqrt(n), the CLT check
    double clt_gap = 0.0;         // |norm_p - gaussian endpoint| at uniform theta
    double clt_gap_stderr = 0.0;
};

namespace detail {

inline KhinchinTrial khinchin_one_theta(const SymmetricLaw& law, double p,
                                        std::vector<double> theta, double lower, double upper,
                                        std::uint64_t seed, std::size_t n) {
    std::vector<double> a(theta.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = theta[i] * theta[i];
    const StarBody body = StarBody::euclidean(1);
    const McEstimate m = p >= 0.0 ? moment_mc(law, a, 2.0, p, body, seed, n)
                                  : mc_median_of_means(
                                        law, a, 2.0, seed, n,
                                        [p](std::span<const double> s) {
                                            return std::pow(std::abs(s[0]), p);
                                        },
                                        32);
    KhinchinTrial tr;
    tr.theta = std::move(theta);
    tr.norm_p = std::pow(m.estimate, 1.0 / p);
    tr.norm_p_stderr = std::abs(tr.norm_p / (p * m.estimate)) * m.stderr_;
    tr.slack_lower = tr.norm_p - lower;
    tr.slack_upper = upper - tr.norm_p;
    tr.violated = tr.slack_lower < -4.0 * tr.norm_p_stderr ||
                  tr.slack_upper < -4.0 * tr.norm_p_stderr;
    return tr;
}

}  // namespace detail

/// Checks the sharp Khinchin sandwich for `trials` random directions on
/// S^{n-1}; the orientation of the two constants follows the law's verdict at
/// q = 2 (log-convex: Gaussian constant on top; log-concave: reversed).
inline KhinchinReport khinchin_verify(const SymmetricLaw& law, double p, int n, int trials,
                                      std::uint64_t seed, std::size_t n_samples) {
    if (law.dim() != 1) throw UnsupportedEvaluation("khinchin_verify: law must be on R");
    KhinchinReport rep;
    rep.verdict = condition_check(law, 2.0).verdict;
    if (rep.verdict != Verdict::LogConvex && rep.verdict != Verdict::LogConcave &&
        rep.verdict != Verdict::Affine)
        throw Error("khinchin_verify: law must be log-convex or log-concave at q = 2");
    rep.constants = khinchin_constants(law, p);
    rep.sigma = std::sqrt(abs_moment(law, 2.0));
    const bool convex = rep.verdict != Verdict::LogConcave;
    const double gauss_end = rep.constants.c_gauss * rep.sigma;
    const double self_end = rep.constants.c_self * rep.sigma;
    const double lower = convex ? self_end : gauss_end;
    const double upper = convex ? gauss_end : self_end;

    Rng dir_rng(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL));
    rep.worst_slack = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        std::vector<double> theta(n);
        double n2 = 0.0;
        for (auto& v : theta) {
            v = dir_rng.normal();
            n2 += v * v;
        }
        const double nn = std::sqrt(n2);
        for (auto& v : theta) v /= nn;
        auto tr = detail::khinchin_one_theta(law, p, std::move(theta), lower, upper,
                                             splitmix64(seed + 7919ULL * (t + 1)), n_samples);
        rep.violations += tr.violated ? 1 : 0;
        rep.worst_slack = std::min({rep.worst_slack, tr.slack_lower, tr.slack_upper});
        rep.trials.push_back(std::move(tr));
    }
    std::vector<double> uni(n, 1.0 / std::sqrt(static_cast<double>(n)));
    rep.uniform_trial = detail::khinchin_one_theta(law, p, std::move(uni), lower, upper,
                                                   splitmix64(seed ^ 0xabcdef12345ULL), n_samples);
    rep.clt_gap = std::abs(rep.uniform_trial.norm_p - gauss_end);
    rep.clt_gap_stderr = rep.uniform_trial.norm_p_stderr;
    return rep;
}

}  // namespace sf
