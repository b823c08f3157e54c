#include <catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "schur_fourier/laws.hpp"

using namespace sf;

namespace {

std::vector<SymmetricLaw> d1_laws() {
    return {
        SymmetricLaw::gaussian(1, 1.0),
        SymmetricLaw::laplace(1.0),
        SymmetricLaw::stable(1.0, 1.0),
        SymmetricLaw::stable(0.7, 0.8),
        SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0),
        SymmetricLaw::tri_cube(),
        SymmetricLaw::uniform_box(0.5),
        SymmetricLaw::gaussian_mixture(1, {0.5, 0.5}, {1.0, 3.0}),
        SymmetricLaw::q_stable_mixture(1.2, 1.0, DiscreteMixing{{0.3, 0.7}, {0.5, 2.0}}),
        SymmetricLaw::exp_power(0.5, StarBody::euclidean(1)),
    };
}

}  // namespace

TEST_CASE("cf values at closed-form points") {
    CHECK(cf_eval1(SymmetricLaw::gaussian(1, 1.0), 1.0) ==
          Catch::Approx(std::exp(-2.0 * kPi * kPi)).epsilon(1e-12));
    CHECK(cf_eval1(SymmetricLaw::laplace(1.0), 1.0 / kTwoPi) == Catch::Approx(0.5).epsilon(1e-12));
    for (const auto& law : d1_laws()) CHECK(cf_eval1(law, 0.0) == Catch::Approx(1.0).margin(1e-12));
    // stable cf under the 2 pi convention
    CHECK(cf_eval1(SymmetricLaw::stable(1.0, 1.0), 1.0) ==
          Catch::Approx(std::exp(-kTwoPi)).epsilon(1e-12));
}

TEST_CASE("cf evenness and boundedness on a grid") {
    for (const auto& law : d1_laws()) {
        for (int i = 0; i < 25; ++i) {
            const double t = -3.0 + 6.0 * i / 24.0;
            const double c = cf_eval1(law, t);
            CHECK(c == Catch::Approx(cf_eval1(law, -t)).margin(1e-13));
            CHECK(std::abs(c) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("laplace cf against density quadrature oracle") {
    auto rho = [](double x) { return 0.5 * std::exp(-std::abs(x)); };
    for (double t : {0.05, 0.31, 1.7}) {
        const double expected = oracle::cf_from_density(rho, t, 60.0);
        CHECK(cf_eval1(SymmetricLaw::laplace(1.0), t) == Catch::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("tri_cube cf: closed form matches density quadrature and stays positive") {
    auto law = SymmetricLaw::tri_cube();
    auto rho = [](double x) {
        const double a = 1.0 - std::abs(x);
        return a > 0.0 ? 2.0 * a * a * a : 0.0;
    };
    for (double t : {0.01, 0.2, 0.9, 2.3, 7.7}) {
        const double expected = oracle::cf_from_density(rho, t, 1.0);
        CHECK(cf_eval1(law, t) == Catch::Approx(expected).margin(1e-11));
    }
    for (int i = 1; i < 400; ++i) CHECK(cf_eval1(law, 0.05 * i) > 0.0);
}

TEST_CASE("exp_power cf: radial quadrature against independent oracle") {
    SECTION("d=1, p=1/2") {
        auto law = SymmetricLaw::exp_power(0.5, StarBody::euclidean(1));
        auto rho = [](double x) { return std::exp(-std::sqrt(std::abs(x))); };
        const double norm = oracle::integrate([&](double x) { return rho(x); }, 0.0, 1500.0);
        for (double t : {0.05, 0.2, 1.0}) {
            const double expected =
                oracle::integrate([&](double x) { return rho(x) * std::cos(kTwoPi * t * x); },
                                  0.0, 1500.0, 1e-12) /
                norm;
            CHECK(cf_eval1(law, t) == Catch::Approx(expected).epsilon(2e-7));
        }
    }
    SECTION("d=1, p=1.3") {
        auto law = SymmetricLaw::exp_power(1.3, StarBody::euclidean(1));
        auto rho = [](double x) { return std::exp(-std::pow(std::abs(x), 1.3)); };
        const double norm = oracle::integrate(rho, 0.0, 30.0);
        for (double t : {0.1, 0.6}) {
            const double expected =
                oracle::integrate([&](double x) { return rho(x) * std::cos(kTwoPi * t * x); },
                                  0.0, 30.0, 1e-12) /
                norm;
            CHECK(cf_eval1(law, t) == Catch::Approx(expected).epsilon(2e-8));
        }
    }
    SECTION("d=2 and d=3, p=1: closed forms of the radial Laplace density") {
        auto law2 = SymmetricLaw::exp_power(1.0, StarBody::euclidean(2));
        auto law3 = SymmetricLaw::exp_power(1.0, StarBody::euclidean(3));
        for (double tau : {0.07, 0.4, 1.3}) {
            std::vector<double> t2{tau, 0.0}, t3{0.0, tau, 0.0};
            const double b2 = 1.0 + 4.0 * kPi * kPi * tau * tau;
            CHECK(cf_eval(law2, t2) == Catch::Approx(std::pow(b2, -1.5)).epsilon(1e-7));
            CHECK(cf_eval(law3, t3) == Catch::Approx(std::pow(b2, -2.0)).epsilon(1e-7));
        }
    }
    SECTION("p=2 collapses to the exact Gaussian transform") {
        auto law = SymmetricLaw::exp_power(2.0, StarBody::euclidean(2));
        std::vector<double> t{0.3, -0.4};
        CHECK(cf_eval(law, t) == Catch::Approx(std::exp(-kPi * kPi * 0.25)).epsilon(1e-13));
    }
    SECTION("non-radial bodies in d >= 2 are rejected") {
        auto law = SymmetricLaw::exp_power(1.0, StarBody::weighted_lq(1.0, {1.0, 2.0}));
        std::vector<double> t{0.1, 0.1};
        CHECK_THROWS_AS(cf_eval(law, t), UnsupportedEvaluation);
    }
}

TEST_CASE("gaussian mixture cf is the weighted sum of gaussian cfs") {
    auto law = SymmetricLaw::gaussian_mixture(1, {0.25, 0.75}, {0.5, 2.0});
    for (double t : {0.0, 0.13, 0.8, 2.2}) {
        const double direct = 0.25 * std::exp(-2.0 * kPi * kPi * 0.25 * t * t) +
                              0.75 * std::exp(-2.0 * kPi * kPi * 4.0 * t * t);
        CHECK(cf_eval1(law, t) == Catch::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("q-stable mixture cf equals quadrature over the mixing law") {
    const double alpha = 1.2, c = 1.0;
    SECTION("discrete mixing") {
        auto law = SymmetricLaw::q_stable_mixture(alpha, c, DiscreteMixing{{0.3, 0.7}, {0.5, 2.0}});
        for (double t : {0.1, 0.7}) {
            const double z = c * std::pow(kTwoPi * t, alpha);
            const double direct = 0.3 * std::exp(-z * std::pow(0.5, alpha)) +
                                  0.7 * std::exp(-z * std::pow(2.0, alpha));
            CHECK(cf_eval1(law, t) == Catch::Approx(direct).epsilon(1e-12));
        }
    }
    SECTION("uniform mixing") {
        auto law = SymmetricLaw::q_stable_mixture(alpha, c, UniformMixing{0.5, 1.5});
        for (double t : {0.08, 0.9}) {
            const double z = c * std::pow(kTwoPi * t, alpha);
            const double expected =
                oracle::integrate([&](double y) { return std::exp(-z * std::pow(y, alpha)); }, 0.5,
                                  1.5);
            CHECK(cf_eval1(law, t) == Catch::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("empirical cf matches cf_eval for sampler-bearing laws") {
    const std::size_t n = 100000;
    for (const auto& law : d1_laws()) {
        if (!law.has_sampler()) continue;
        const auto xs = sample(law, 20250607, n);
        const double bound = 5.0 / std::sqrt(static_cast<double>(n));
        for (int j = 0; j < 20; ++j) {
            const double t = 0.03 + 0.12 * j;
            double acc = 0.0;
            for (double x : xs) acc += std::cos(kTwoPi * t * x);
            const double ecf = acc / static_cast<double>(n);
            REQUIRE(std::abs(ecf - cf_eval1(law, t)) < bound);
        }
    }
}

TEST_CASE("samplers: determinism, symmetry, degenerate mixture") {
    auto law = SymmetricLaw::gaussian(1, 1.0);
    CHECK(sample(law, 99, 1000) == sample(law, 99, 1000));

    const auto xs = sample(law, 7, 100000);
    CHECK(std::abs(oracle::mean(xs)) < 4.0 / std::sqrt(100000.0));

    // Cauchy: median near zero, empirical cf at t=1 near e^{-2 pi}
    const auto cs = sample(SymmetricLaw::stable(1.0, 1.0), 11, 100000);
    CHECK(std::abs(oracle::median(cs)) < 0.02);
    double acc = 0.0;
    for (double x : cs) acc += std::cos(kTwoPi * x);
    CHECK(std::abs(acc / 100000.0 - std::exp(-kTwoPi)) < 5.0 / std::sqrt(100000.0));

    // Y == 1 mixing degenerates to the plain stable law
    const auto a = sample(SymmetricLaw::q_stable_mixture(1.5, 1.0, DiscreteMixing{{1.0}, {1.0}}),
                          13, 20000);
    const auto b = sample(SymmetricLaw::stable(1.5, 1.0), 14, 20000);
    CHECK(oracle::ks_statistic(a, b) < oracle::ks_threshold(20000, 20000));

    CHECK_THROWS_AS(sample(SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0), 1, 10), NoSampler);
}

TEST_CASE("abs_moment closed forms and error paths") {
    CHECK(abs_moment(SymmetricLaw::gaussian(1, 1.0), 2.0) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(abs_moment(SymmetricLaw::laplace(1.0), 1.0) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(abs_moment(SymmetricLaw::laplace(1.0), 2.0) == Catch::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(abs_moment(SymmetricLaw::stable(1.0, 1.0), 1.0), DivergentMoment);

    // Laplace p-moment against the density quadrature oracle
    auto rho = [](double x) { return 0.5 * std::exp(-std::abs(x)); };
    for (double p : {0.4, 1.0, 1.7}) {
        const double expected =
            2.0 * oracle::integrate([&](double x) { return std::pow(x, p) * rho(x); }, 0.0, 80.0);
        CHECK(abs_moment(SymmetricLaw::laplace(1.0), p) == Catch::Approx(expected).epsilon(1e-8));
    }

    // stable moment formula cross-checked at the Cauchy point sec(pi p / 2)
    CHECK(abs_moment(SymmetricLaw::stable(1.0, 1.0), 0.5) ==
          Catch::Approx(std::sqrt(2.0)).epsilon(1e-10));

    // tri_cube second moment
    CHECK(abs_moment(SymmetricLaw::tri_cube(), 2.0) == Catch::Approx(1.0 / 15.0).epsilon(1e-12));

    // chi(3) inverse moment: E|Z_3|^{-1} = sqrt(2/pi)
    CHECK(abs_moment(SymmetricLaw::gaussian(3, 1.0), -1.0) ==
          Catch::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-12));

    // pseudo-stable second moment from the cf curvature
    CHECK(abs_moment(SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0), 2.0) ==
          Catch::Approx(1.0 / (2.0 * kPi * kPi)).epsilon(1e-12));
}

TEST_CASE("cf-route moments agree with closed forms on a CfOnly wrapper") {
    // wrap the Laplace cf so the generic path is exercised
    auto law = SymmetricLaw::cf_only(
        1, [](std::span<const double> t) { return 1.0 / (1.0 + 4.0 * kPi * kPi * t[0] * t[0]); });
    CHECK(abs_moment(law, 1.0) == Catch::Approx(1.0).epsilon(1e-7));
    CHECK(abs_moment(law, 1.5) == Catch::Approx(std::tgamma(2.5)).epsilon(1e-7));
    CHECK(abs_moment(law, -0.5) == Catch::Approx(std::tgamma(0.5)).epsilon(1e-6));
}

TEST_CASE("matrix-atom gaussian mixtures") {
    Eigen::MatrixXd c1(2, 2), c2(2, 2);
    c1 << 1.0, 0.3, 0.3, 0.5;
    c2 << 2.0, -0.4, -0.4, 1.0;
    auto law = SymmetricLaw::gaussian_mixture({0.4, 0.6}, {c1, c2});
    std::vector<double> t{0.2, -0.1};
    Eigen::Vector2d tv(0.2, -0.1);
    const double direct = 0.4 * std::exp(-2.0 * kPi * kPi * tv.dot(c1 * tv)) +
                          0.6 * std::exp(-2.0 * kPi * kPi * tv.dot(c2 * tv));
    CHECK(cf_eval(law, t) == Catch::Approx(direct).epsilon(1e-12));

    // E|X|^2 = sum_j w_j tr(C_j)
    const double m2 = abs_moment(law, 2.0);
    CHECK(m2 == Catch::Approx(0.4 * c1.trace() + 0.6 * c2.trace()).epsilon(1e-4));
}

TEST_CASE("cf_only grid interpolation and range guard") {
    auto law = SymmetricLaw::cf_only_grid({0.0, 1.0, 2.0}, {1.0, 0.5, 0.25});
    CHECK(cf_eval1(law, 0.5) == Catch::Approx(0.75));
    CHECK(cf_eval1(law, -1.5) == Catch::Approx(0.375));
    CHECK_THROWS_AS(cf_eval1(law, 2.5), UnsupportedEvaluation);
}

TEST_CASE("pseudo_stable admissible exponent ranges") {
    CHECK_NOTHROW(SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0));
    CHECK_NOTHROW(SymmetricLaw::pseudo_stable(9.5, 1.0, 1.0));
    CHECK_THROWS(SymmetricLaw::pseudo_stable(3.0, 1.0, 1.0));
    CHECK_THROWS(SymmetricLaw::pseudo_stable(6.5, 1.0, 1.0));
    CHECK_THROWS(SymmetricLaw::pseudo_stable(4.0, 1.0, 1.0));
}

TEST_CASE("non-finite cf arguments are rejected") {
    CHECK_THROWS_AS(cf_eval1(SymmetricLaw::gaussian(1, 1.0),
                             std::numeric_limits<double>::infinity()),
                    NonFinite);
}
