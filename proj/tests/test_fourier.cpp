#include <catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "schur_fourier/fourier.hpp"
#include "schur_fourier/schur.hpp"

using namespace sf;

TEST_CASE("condition_check truth table for stable laws") {
    for (const auto& [alpha, q] : std::vector<std::pair<double, double>>{
             {1.0, 2.0}, {0.5, 1.0}, {1.5, 2.0}, {1.9, 2.0}}) {
        CHECK(condition_check(SymmetricLaw::stable(alpha, 1.0), q).verdict == Verdict::LogConvex);
    }
    for (const auto& [alpha, q] : std::vector<std::pair<double, double>>{
             {1.0, 0.5}, {1.5, 1.0}, {2.0, 1.5}}) {
        CHECK(condition_check(SymmetricLaw::stable(alpha, 1.0), q).verdict == Verdict::LogConcave);
    }
    for (double alpha : {0.5, 1.0, 2.0}) {
        CHECK(condition_check(SymmetricLaw::stable(alpha, 1.0), alpha).verdict == Verdict::Affine);
    }
}

TEST_CASE("condition_check on the other families") {
    CHECK(condition_check(SymmetricLaw::gaussian(1, 1.0), 2.0).verdict == Verdict::Affine);
    CHECK(condition_check(SymmetricLaw::gaussian(3, 0.7), 2.0).verdict == Verdict::Affine);
    CHECK(condition_check(SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0), 2.0).verdict ==
          Verdict::LogConcave);
    CHECK(condition_check(SymmetricLaw::laplace(1.0), 2.0).verdict == Verdict::LogConvex);
    // log(1/(1+c r^2)) is concave near 0 and convex far out
    CHECK(condition_check(SymmetricLaw::laplace(1.0), 1.0).verdict == Verdict::Neither);
    CHECK(condition_check(SymmetricLaw::gaussian_mixture(1, {0.5, 0.5}, {1.0, 3.0}), 2.0).verdict ==
          Verdict::LogConvex);
    // degenerate mixing at q = alpha collapses to the affine stable case
    CHECK(condition_check(
              SymmetricLaw::q_stable_mixture(1.3, 1.0, DiscreteMixing{{1.0}, {1.0}}), 1.3)
              .verdict == Verdict::Affine);
    CHECK(condition_check(
              SymmetricLaw::q_stable_mixture(1.3, 1.0, DiscreteMixing{{0.5, 0.5}, {0.5, 2.0}}), 1.3)
              .verdict == Verdict::LogConvex);
    // the example pointed out by Nayar: numerically log-convex at q = 2
    CHECK(condition_check(SymmetricLaw::tri_cube(), 2.0).verdict == Verdict::LogConvex);
    // sign-changing cf is outside the hypotheses
    CHECK_THROWS_AS(condition_check(SymmetricLaw::uniform_box(0.5), 2.0), NonPositiveCf);
}

TEST_CASE("section_zero closed-form fixtures") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    SECTION("gaussian marginals are constant on the sphere") {
        auto law = SymmetricLaw::gaussian(1, 1.0);
        const double expect = 1.0 / std::sqrt(kTwoPi);
        CHECK(section_zero(law, std::vector<double>{1.0}, spec) ==
              Catch::Approx(expect).epsilon(1e-8));
        CHECK(section_zero(law, std::vector<double>{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)},
                           spec) == Catch::Approx(expect).epsilon(1e-8));
        CHECK(section_zero(law, std::vector<double>{0.2, -0.5, 0.6, std::sqrt(0.45)}, spec) ==
              Catch::Approx(expect).epsilon(1e-8));
    }
    SECTION("laplace single factor via the quadrature path") {
        CHECK(section_zero(SymmetricLaw::laplace(1.0), std::vector<double>{1.0}, spec) ==
              Catch::Approx(0.5).epsilon(1e-8));
    }
    SECTION("cube sections from the uniform law") {
        auto law = SymmetricLaw::uniform_box(0.5);
        QuadratureSpec cube;
        cube.rel_tol = 3e-7;
        cube.tail_eps = 1e-9;
        CHECK(section_zero(law, std::vector<double>{1.0, 0.0}, cube) == Catch::Approx(1.0));
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(section_zero(law, std::vector<double>{s, s}, cube) ==
              Catch::Approx(std::sqrt(2.0)).margin(2e-6));
        // oblique direction: section length of the unit square
        CHECK(section_zero(law, std::vector<double>{0.6, 0.8}, cube) ==
              Catch::Approx(1.25).margin(2e-6));
    }
    SECTION("d = 2 radial gaussian") {
        auto law = SymmetricLaw::gaussian(2, 1.0);
        CHECK(section_zero(law, std::vector<double>{0.6, 0.8}, spec) ==
              Catch::Approx(1.0 / kTwoPi).epsilon(1e-7));
    }
}

TEST_CASE("section invariances") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    auto law = SymmetricLaw::laplace(1.0);
    const std::vector<double> y{0.3, -0.8, 0.52};
    const double base = section_zero(law, y, spec);
    SECTION("permutation and sign flips") {
        CHECK(section_zero(law, std::vector<double>{-0.8, 0.52, 0.3}, spec) ==
              Catch::Approx(base).epsilon(1e-8));
        CHECK(section_zero(law, std::vector<double>{0.3, 0.8, -0.52}, spec) ==
              Catch::Approx(base).epsilon(1e-8));
    }
    SECTION("scale invariance through the |y|^d prefactor") {
        std::vector<double> y2 = y;
        for (auto& v : y2) v *= 2.7;
        CHECK(section_zero(law, y2, spec) == Catch::Approx(base).epsilon(1e-8));
    }
}

TEST_CASE("section_at fixtures") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    SECTION("t = 0 reduces to section_zero") {
        auto law = SymmetricLaw::laplace(1.0);
        std::vector<double> y{0.6, 0.8};
        CHECK(section_at(law, y, std::vector<double>{0.0}, spec) ==
              Catch::Approx(section_zero(law, y, spec)).epsilon(1e-10));
    }
    SECTION("gaussian marginal at t = 1") {
        CHECK(section_at(SymmetricLaw::gaussian(1, 1.0), std::vector<double>{1.0},
                         std::vector<double>{1.0}, spec) ==
              Catch::Approx(std::exp(-0.5) / std::sqrt(kTwoPi)).epsilon(1e-8));
    }
    SECTION("square sections off the center") {
        auto law = SymmetricLaw::uniform_box(0.5);
        QuadratureSpec cube;
        cube.rel_tol = 3e-7;
        cube.tail_eps = 1e-9;
        // single active coordinate: vertical slice at x1 = 0.25 has length 1
        CHECK(section_at(law, std::vector<double>{1.0, 0.0}, std::vector<double>{0.25}, cube) ==
              Catch::Approx(1.0));
        // diagonal slice at offset t: length sqrt(2) - 2t
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(section_at(law, std::vector<double>{s, s}, std::vector<double>{0.2}, cube) ==
              Catch::Approx(std::sqrt(2.0) - 0.4).margin(2e-6));
    }
}

TEST_CASE("laplace n=2 section agrees with the convolution oracle") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-8;
    auto law = SymmetricLaw::laplace(1.0);
    auto rho = [](double x) { return 0.5 * std::exp(-std::abs(x)); };
    for (const auto& y : std::vector<std::vector<double>>{{0.6, 0.8}, {0.3, -0.95}}) {
        const double nrm = std::hypot(y[0], y[1]);
        // parameterize the line {y . x = 0} by arclength
        auto integrand = [&](double u) {
            return rho(-u * y[1] / nrm) * rho(u * y[0] / nrm);
        };
        const double expected = oracle::integrate(integrand, -200.0, 200.0, 1e-12);
        CHECK(section_zero(law, y, spec) == Catch::Approx(expected).margin(1e-6));
    }
}

TEST_CASE("sections needing a density for a lone factor reject CfOnly laws") {
    auto law = SymmetricLaw::cf_only(
        1, [](std::span<const double> t) { return std::sin(kPi * t[0]) / (kPi * t[0] + 1e-300); },
        false, false);
    CHECK_THROWS_AS(section_zero(law, std::vector<double>{1.0, 0.0}), NotIntegrable);
}

TEST_CASE("codim_section fixtures") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-8;
    SECTION("k = 1 agrees with section_zero") {
        auto law = SymmetricLaw::laplace(1.0);
        Eigen::MatrixXd frame(1, 3);
        frame << 0.3, -0.8, std::sqrt(1.0 - 0.09 - 0.64);
        std::vector<double> y{frame(0, 0), frame(0, 1), frame(0, 2)};
        CHECK(codim_section(law, frame, spec) ==
              Catch::Approx(section_zero(law, y, spec)).epsilon(1e-7));
    }
    SECTION("gaussian joint density at 0 for any orthonormal frame") {
        auto law = SymmetricLaw::gaussian(1, 1.0);
        Eigen::MatrixXd frame(2, 3);
        frame << 0.6, 0.8, 0.0, -0.8, 0.6, 0.0;  // non-separable columns
        CHECK(codim_section(law, frame, spec) == Catch::Approx(1.0 / kTwoPi).epsilon(1e-6));
        Eigen::MatrixXd frame3(3, 4);
        frame3.setZero();
        frame3(0, 0) = frame3(1, 1) = frame3(2, 2) = 1.0;
        CHECK(codim_section(law, frame3, spec) ==
              Catch::Approx(std::pow(kTwoPi, -1.5)).epsilon(1e-5));
    }
    SECTION("cube: codim-2 coordinate section of the 3-cube") {
        auto law = SymmetricLaw::uniform_box(0.5);
        Eigen::MatrixXd frame(2, 3);
        frame.setZero();
        frame(0, 0) = 1.0;
        frame(1, 1) = 1.0;
        CHECK(codim_section(law, frame, spec) == Catch::Approx(1.0));
    }
    SECTION("orthonormality is enforced") {
        auto law = SymmetricLaw::gaussian(1, 1.0);
        Eigen::MatrixXd bad(2, 3);
        bad << 1.0, 0.0, 0.0, 0.5, 0.5, 0.0;
        CHECK_THROWS_AS(codim_section(law, bad, spec), FrameNotOrthonormal);
    }
}

TEST_CASE("stable section has the closed form 1/(pi c sum sqrt(a))") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    auto law = SymmetricLaw::stable(1.0, 1.0);
    auto section = [&](std::span<const double> a) {
        std::vector<double> y(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = std::sqrt(a[i]);
        return section_zero(law, y, spec);
    };
    for (const auto& a : std::vector<std::vector<double>>{
             {1.0, 0.0, 0.0}, {0.5, 0.3, 0.2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}) {
        double ssq = 0.0;
        for (double v : a) ssq += std::sqrt(v);
        CHECK(section(a) == Catch::Approx(1.0 / (kPi * ssq)).epsilon(1e-7));
    }
    // Koldobsky regime: log-convex cf at q=2, so a -> S(sqrt a) is Schur convex
    CHECK(test_schur(section, 3, 40, 1e-8, 91, SchurMode::Convex).ok);
    CHECK_FALSE(test_schur(section, 3, 40, 1e-8, 91, SchurMode::Concave).ok);
}

TEST_CASE("pseudo-stable sections are Schur concave") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    auto law = SymmetricLaw::pseudo_stable(5.0, 1.0, 1.0);
    auto section = [&](std::span<const double> a) {
        std::vector<double> y(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = std::sqrt(a[i]);
        return section_zero(law, y, spec);
    };
    CHECK(test_schur(section, 3, 25, 1e-8, 17, SchurMode::Concave).ok);
}

TEST_CASE("cf_exp_power_discrete") {
    SECTION("p = 2 isotropic atoms give the exact gaussian cf") {
        auto body = StarBody::discrete_lp(2.0, 2, {{1.0, {1.0, 0.0}}, {1.0, {0.0, 1.0}}});
        for (const auto& t : std::vector<std::vector<double>>{{0.2, 0.0}, {0.5, -0.3}}) {
            const double n2 = t[0] * t[0] + t[1] * t[1];
            CHECK(cf_exp_power_discrete(body, 2.0, t) ==
                  Catch::Approx(std::exp(-kPi * kPi * n2)).epsilon(1e-12));
        }
    }
    SECTION("d=1 single atom matches the laws route") {
        auto body = StarBody::discrete_lp(1.0, 1, {{1.0, {1.0}}});
        auto law_half = SymmetricLaw::exp_power(0.5, StarBody::euclidean(1));
        auto law_one = SymmetricLaw::exp_power(1.0, StarBody::euclidean(1));
        for (double t : {0.05, 0.3, 1.1}) {
            CHECK(cf_exp_power_discrete(body, 0.5, std::vector<double>{t}) ==
                  Catch::Approx(cf_eval1(law_half, t)).epsilon(1e-6));
            CHECK(cf_exp_power_discrete(body, 1.0, std::vector<double>{t}) ==
                  Catch::Approx(cf_eval1(law_one, t)).epsilon(1e-6));
        }
    }
    SECTION("r -> cf(sqrt r t) is log-convex for the tight-frame body") {
        std::vector<DiscreteAtom> atoms;
        for (int k = 0; k < 3; ++k) {
            const double a = kPi * k / 3.0;
            atoms.push_back({2.0 / 3.0, {std::cos(a), std::sin(a)}});
        }
        auto body = StarBody::discrete_lp(1.0, 2, atoms);
        for (const auto& t : std::vector<std::vector<double>>{{0.8, 0.3}, {0.1, -0.6}}) {
            std::vector<double> rs(21), logs(21);
            for (int i = 0; i < 21; ++i) {
                rs[i] = std::pow(10.0, -2.0 + 3.5 * i / 20.0);
                std::vector<double> arg{std::sqrt(rs[i]) * t[0], std::sqrt(rs[i]) * t[1]};
                logs[i] = std::log(cf_exp_power_discrete(body, 1.0, arg, {}, 96));
            }
            for (int i = 1; i + 1 < 21; ++i) {
                const double lam = (rs[i + 1] - rs[i]) / (rs[i + 1] - rs[i - 1]);
                const double gap = lam * logs[i - 1] + (1.0 - lam) * logs[i + 1] - logs[i];
                CHECK(gap >= -1e-7 * std::max(1.0, std::abs(logs[i])));
            }
        }
    }
    SECTION("isotropy violations are rejected") {
        auto skew = StarBody::discrete_lp(1.0, 2, {{2.0, {1.0, 0.0}}}, false);
        CHECK_THROWS_AS(cf_exp_power_discrete(skew, 1.0, std::vector<double>{0.1, 0.1}),
                        IsotropyViolated);
    }
}

TEST_CASE("discrete_lp_volume reproduces classical volumes") {
    // two isotropic atoms in d=2 with p=2: Euclidean disc
    auto disc = StarBody::discrete_lp(2.0, 2, {{1.0, {1.0, 0.0}}, {1.0, {0.0, 1.0}}});
    CHECK(discrete_lp_volume(disc) == Catch::Approx(kPi).epsilon(1e-10));
    // p=1: the cross-polytope |x1| + |x2| <= 1 has area 2
    auto cross = StarBody::discrete_lp(1.0, 2, {{1.0, {1.0, 0.0}}, {1.0, {0.0, 1.0}}});
    CHECK(discrete_lp_volume(cross) == Catch::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("bpn_block_section fixtures") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-9;
    const StarBody seg = StarBody::euclidean(1);  // K = [-1,1]
    SECTION("p=2, n=3: every central section of the euclidean ball is a disc") {
        for (const auto& th : std::vector<std::vector<double>>{
                 {1.0, 0.0, 0.0}, {0.5, 0.5, std::sqrt(0.5)}}) {
            CHECK(bpn_block_section(seg, 2.0, th, spec) == Catch::Approx(kPi).epsilon(1e-8));
        }
    }
    SECTION("p=1, n=3: coordinate section of the cross-polytope") {
        CHECK(bpn_block_section(seg, 1.0, std::vector<double>{1.0, 0.0, 0.0}, spec) ==
              Catch::Approx(2.0).epsilon(1e-9));
    }
}
