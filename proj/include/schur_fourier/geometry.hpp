#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/parallel.hpp"
#include "schur_fourier/rng.hpp"

namespace sf {

struct EuclideanBody {
    int dim = 1;
};

/// K = {x : x'Ax <= 1}, A symmetric positive definite.
struct EllipsoidBody {
    Eigen::MatrixXd a;          // quadratic form
    Eigen::MatrixXd chol;       // L with A = L L'
    Eigen::MatrixXd inv_chol_t; // (L')^{-1}: pushes Euclidean samples onto K
};

/// ||x||^q = sum_i w_i |x_i|^q, w_i > 0.
struct WeightedLqBody {
    double q = 1.0;
    std::vector<double> w;
};

struct DiscreteAtom {
    double c;
    std::vector<double> u;  // unit vector
};

/// ||x||^p = sum_j c_j |<x,u_j>|^p with isotropic atoms (Lewis-position
/// surrogate). p in (0,2].
struct DiscreteLpBody {
    double p = 1.0;
    int dim = 1;
    std::vector<DiscreteAtom> atoms;
    bool isotropic = true;  // when set, construction enforces isotropy to 1e-8
};

class StarBody {
public:
    using Variant = std::variant<EuclideanBody, EllipsoidBody, WeightedLqBody, DiscreteLpBody>;

    static StarBody euclidean(int dim);
    static StarBody ellipsoid(const Eigen::MatrixXd& a);
    static StarBody weighted_lq(double q, std::vector<double> w);
    static StarBody discrete_lp(double p, int dim, std::vector<DiscreteAtom> atoms,
                                bool require_isotropic = true);

    int dim() const { return dim_; }
    const Variant& family() const { return *fam_; }
    /// Stable address shared by copies; usable as a cache key while any copy
    /// (or a value holding one) is alive.
    const void* identity() const { return fam_.get(); }

    template <class T>
    const T* get_if() const {
        return std::get_if<T>(fam_.get());
    }

private:
    StarBody(Variant v, int d) : fam_(std::make_shared<Variant>(std::move(v))), dim_(d) {}
    std::shared_ptr<const Variant> fam_;
    int dim_ = 1;
};

struct IsotropyReport {
    bool ok = false;
    double deviation = 0.0;  // operator-norm distance of sum c_j u_j u_j' from I
};

inline IsotropyReport isotropy_check(const std::vector<DiscreteAtom>& atoms, int dim,
                                     double tol = 1e-8) {
    if (atoms.empty()) throw Error("isotropy_check: empty atom list");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& a : atoms) {
        if (static_cast<int>(a.u.size()) != dim) throw LengthMismatch("isotropy_check: atom dimension mismatch");
        Eigen::Map<const Eigen::VectorXd> u(a.u.data(), dim);
        m += a.c * u * u.transpose();
    }
    m -= Eigen::MatrixXd::Identity(dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const double dev = es.eigenvalues().cwiseAbs().maxCoeff();
    return {dev <= tol, dev};
}

inline StarBody StarBody::euclidean(int dim) {
    if (dim < 1) throw Error("StarBody: dim must be positive");
    return StarBody(EuclideanBody{dim}, dim);
}

inline StarBody StarBody::ellipsoid(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1) throw Error("StarBody: ellipsoid matrix must be square");
    if (!a.isApprox(a.transpose(), 1e-12)) throw Error("StarBody: ellipsoid matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw Error("StarBody: ellipsoid matrix must be positive definite");
    EllipsoidBody e;
    e.a = a;
    e.chol = llt.matrixL();
    e.inv_chol_t = Eigen::MatrixXd(llt.matrixL().transpose())
                       .triangularView<Eigen::Upper>()
                       .solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    return StarBody(std::move(e), static_cast<int>(a.rows()));
}

inline StarBody StarBody::weighted_lq(double q, std::vector<double> w) {
    if (!(q > 0.0)) throw Error("StarBody: q must be positive");
    if (w.empty()) throw Error("StarBody: weights must be nonempty");
    for (double x : w)
        if (!(x > 0.0)) throw Error("StarBody: weights must be positive");
    const int d = static_cast<int>(w.size());
    return StarBody(WeightedLqBody{q, std::move(w)}, d);
}

inline StarBody StarBody::discrete_lp(double p, int dim, std::vector<DiscreteAtom> atoms,
                                      bool require_isotropic) {
    if (!(p > 0.0 && p <= 2.0)) throw Error("StarBody: discrete_lp requires p in (0,2]");
    if (atoms.empty()) throw Error("StarBody: discrete_lp requires atoms");
    for (auto& a : atoms) {
        if (static_cast<int>(a.u.size()) != dim) throw LengthMismatch("StarBody: atom dimension mismatch");
        if (!(a.c > 0.0)) throw Error("StarBody: atom coefficients must be positive");
        double n2 = 0.0;
        for (double x : a.u) n2 += x * x;
        if (std::abs(n2 - 1.0) > 1e-10) throw Error("StarBody: atom directions must be unit vectors");
    }
    if (require_isotropic) {
        const auto rep = isotropy_check(atoms, dim);
        if (!rep.ok)
            throw IsotropyViolated("StarBody: discrete_lp atoms deviate from isotropy by " +
                                   std::to_string(rep.deviation));
    }
    return StarBody(DiscreteLpBody{p, dim, std::move(atoms), require_isotropic}, dim);
}

inline double norm_eval(const StarBody& body, std::span<const double> x) {
    if (static_cast<int>(x.size()) != body.dim()) throw LengthMismatch("norm_eval: dimension mismatch");
    if (const auto* e = body.get_if<EuclideanBody>()) {
        (void)e;
        double s = 0.0;
        for (double v : x) s += v * v;
        return std::sqrt(s);
    }
    if (const auto* e = body.get_if<EllipsoidBody>()) {
        Eigen::Map<const Eigen::VectorXd> v(x.data(), x.size());
        return std::sqrt(v.dot(e->a * v));
    }
    if (const auto* e = body.get_if<WeightedLqBody>()) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += e->w[i] * std::pow(std::abs(x[i]), e->q);
        return std::pow(s, 1.0 / e->q);
    }
    const auto* e = body.get_if<DiscreteLpBody>();
    double s = 0.0;
    for (const auto& a : e->atoms) {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += a.u[i] * x[i];
        s += a.c * std::pow(std::abs(dot), e->p);
    }
    return std::pow(s, 1.0 / e->p);
}

/// Lebesgue volume of the unit ball of the body's norm. For DiscreteLp this
/// lives in the fourier module (it needs the mixture representation).
inline double body_volume(const StarBody& body) {
    const int d = body.dim();
    const double ball = std::exp(0.5 * d * std::log(kPi) - std::lgamma(1.0 + 0.5 * d));
    if (body.get_if<EuclideanBody>()) return ball;
    if (const auto* e = body.get_if<EllipsoidBody>())
        return ball / std::sqrt(e->a.determinant());
    if (const auto* e = body.get_if<WeightedLqBody>()) {
        // |{sum w_i |x_i|^q <= 1}| = 2^d Gamma(1+1/q)^d / (Gamma(1+d/q) prod w_i^{1/q})
        double lg = d * std::log(2.0) + d * std::lgamma(1.0 + 1.0 / e->q) -
                    std::lgamma(1.0 + static_cast<double>(d) / e->q);
        for (double w : e->w) lg -= std::log(w) / e->q;
        return std::exp(lg);
    }
    throw UnsupportedBody("body_volume: use fourier::discrete_lp_volume for DiscreteLp bodies");
}

/// |B_p^n(K)| = |K|^n Gamma(1+d/p)^n / Gamma(1+nd/p), computed in log space.
inline double bpn_volume(int n, int d, double p, double vol_k) {
    if (n < 1 || d < 1 || !(p > 0.0) || !(vol_k > 0.0))
        throw Error("bpn_volume: n, d, p, volK must be positive");
    const double dp = static_cast<double>(d) / p;
    const double lg = n * std::log(vol_k) + n * std::lgamma(1.0 + dp) -
                      std::lgamma(1.0 + n * dp);
    return std::exp(lg);
}

/// ||x||_{l_p^n(K)} for x made of n stacked d-blocks.
inline double bpn_norm(const StarBody& body, double p, int n, std::span<const double> x) {
    const int d = body.dim();
    if (static_cast<int>(x.size()) != n * d) throw LengthMismatch("bpn_norm: expected n*d coordinates");
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::pow(norm_eval(body, x.subspan(i * d, d)), p);
    return std::pow(s, 1.0 / p);
}

namespace detail {

inline constexpr std::size_t kSampleChunk = 8192;

/// One draw from the density proportional to exp(-||x||_K^p).
/// Direction from the cone measure of K, radius G^{1/p} with G ~ Gamma(d/p).
struct ExpPowerSampler {
    const StarBody& body;
    double p;

    void direction(Rng& rng, std::span<double> out) const {
        const int d = body.dim();
        if (const auto* e = body.get_if<WeightedLqBody>()) {
            // Schechtman-Zinn: independent coordinates with density
            // proportional to exp(-w_i |x|^q), then normalize by the gauge.
            for (int i = 0; i < d; ++i) {
                const double g = rng.gamma(1.0 / e->q);
                const double mag = std::pow(g / e->w[i], 1.0 / e->q);
                out[i] = (rng.u01() < 0.5) ? -mag : mag;
            }
        } else {
            for (int i = 0; i < d; ++i) out[i] = rng.normal();
        }
        double nrm;
        if (body.get_if<EllipsoidBody>()) {
            // generate on the Euclidean sphere, push forward below
            nrm = 0.0;
            for (int i = 0; i < d; ++i) nrm += out[i] * out[i];
            nrm = std::sqrt(nrm);
        } else {
            nrm = norm_eval(body, out);
        }
        for (int i = 0; i < d; ++i) out[i] /= nrm;
    }

    void operator()(Rng& rng, std::span<double> out) const {
        const int d = body.dim();
        direction(rng, out);
        const double r = std::pow(rng.gamma(static_cast<double>(d) / p), 1.0 / p);
        for (int i = 0; i < d; ++i) out[i] *= r;
        if (const auto* e = body.get_if<EllipsoidBody>()) {
            Eigen::Map<Eigen::VectorXd> v(out.data(), d);
            v = (e->inv_chol_t * v).eval();
        }
    }
};

inline void require_sampleable(const StarBody& body) {
    if (body.get_if<DiscreteLpBody>())
        throw UnsupportedBody(
            "sampling exp(-||x||^p) is not provided for DiscreteLp bodies; "
            "their role is Fourier-side (see cf_exp_power_discrete)");
}

}  // namespace detail

/// i.i.d. draws from the normalized density c exp(-||x||_K^p); row-major
/// count x d. Deterministic in (seed, count) and chunked so parallel and
/// sequential runs agree bit for bit.
inline std::vector<double> sample_exp_power(const StarBody& body, double p, std::uint64_t seed,
                                            std::size_t count) {
    if (!(p > 0.0)) throw Error("sample_exp_power: p must be positive");
    detail::require_sampleable(body);
    const int d = body.dim();
    std::vector<double> out(count * d);
    const std::size_t n_chunks = (count + detail::kSampleChunk - 1) / detail::kSampleChunk;
    detail::ExpPowerSampler sampler{body, p};
    parallel_for_chunks(n_chunks, [&](std::size_t c) {
        Rng rng(chunk_seed(seed, c));
        const std::size_t begin = c * detail::kSampleChunk;
        const std::size_t end = std::min(count, begin + detail::kSampleChunk);
        for (std::size_t i = begin; i < end; ++i)
            sampler(rng, std::span<double>(out.data() + i * d, d));
    });
    return out;
}

struct ConeBatch {
    int n = 1, d = 1;
    std::size_t count = 0;
    std::vector<double> points;    // count x (n*d), on the sphere S_p^n(K)
    std::vector<double> radius_p;  // ||X||_{l_p^n(K)}^p before normalization
};

/// Cone-measure sampler for B_p^n(K): draws X with n i.i.d. exp(-||.||_K^p)
/// blocks and returns (X/||X||, ||X||^p); the radius is Gamma(nd/p, 1) and
/// independent of the direction.
inline ConeBatch sample_cone_bpnk(const StarBody& body, double p, int n, std::uint64_t seed,
                                  std::size_t count) {
    if (n < 1) throw Error("sample_cone_bpnk: n must be positive");
    if (!(p > 0.0)) throw Error("sample_cone_bpnk: p must be positive");
    detail::require_sampleable(body);
    const int d = body.dim();
    ConeBatch batch;
    batch.n = n;
    batch.d = d;
    batch.count = count;
    batch.points.resize(count * n * d);
    batch.radius_p.resize(count);
    const std::size_t n_chunks = (count + detail::kSampleChunk - 1) / detail::kSampleChunk;
    detail::ExpPowerSampler sampler{body, p};
    parallel_for_chunks(n_chunks, [&](std::size_t c) {
        Rng rng(chunk_seed(seed, c));
        const std::size_t begin = c * detail::kSampleChunk;
        const std::size_t end = std::min(count, begin + detail::kSampleChunk);
        for (std::size_t i = begin; i < end; ++i) {
            double* row = batch.points.data() + i * n * d;
            double sum_p = 0.0;
            for (int b = 0; b < n; ++b) {
                std::span<double> blk(row + b * d, d);
                sampler(rng, blk);
                sum_p += std::pow(norm_eval(body, blk), p);
            }
            const double r = std::pow(sum_p, 1.0 / p);
            for (int j = 0; j < n * d; ++j) row[j] /= r;
            batch.radius_p[i] = sum_p;
        }
    });
    return batch;
}

/// Uniform sampler on B_p^n(K): X as above, Z ~ Exp(1) independent, returns
/// X / (||X||^p + Z)^{1/p}. Row-major count x (n*d).
inline std::vector<double> sample_uniform_bpnk(const StarBody& body, double p, int n,
                                               std::uint64_t seed, std::size_t count) {
    if (n < 1) throw Error("sample_uniform_bpnk: n must be positive");
    if (!(p > 0.0)) throw Error("sample_uniform_bpnk: p must be positive");
    detail::require_sampleable(body);
    const int d = body.dim();
    std::vector<double> out(count * n * d);
    const std::size_t n_chunks = (count + detail::kSampleChunk - 1) / detail::kSampleChunk;
    detail::ExpPowerSampler sampler{body, p};
    parallel_for_chunks(n_chunks, [&](std::size_t c) {
        Rng rng(chunk_seed(seed, c));
        const std::size_t begin = c * detail::kSampleChunk;
        const std::size_t end = std::min(count, begin + detail::kSampleChunk);
        for (std::size_t i = begin; i < end; ++i) {
            double* row = out.data() + i * n * d;
            double sum_p = 0.0;
            for (int b = 0; b < n; ++b) {
                std::span<double> blk(row + b * d, d);
                sampler(rng, blk);
                sum_p += std::pow(norm_eval(body, blk), p);
            }
            const double z = rng.exponential();
            const double scale = std::pow(sum_p + z, 1.0 / p);
            for (int j = 0; j < n * d; ++j) row[j] /= scale;
        }
    });
    return out;
}

}  // namespace sf
