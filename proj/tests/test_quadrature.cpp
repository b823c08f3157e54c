#include <catch_amalgamated.hpp>
#include <cmath>

#include "schur_fourier/quadrature.hpp"
#include "schur_fourier/rng.hpp"

using namespace sf;

TEST_CASE("gaussian integral") {
    QuadratureSpec spec;
    const double v = integrate_even_line([](double s) { return std::exp(-s * s); }, spec);
    CHECK(v == Catch::Approx(std::sqrt(kPi)).epsilon(1e-10));
}

TEST_CASE("lorentzian integral, slow polynomial tail") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-8;
    const double v =
        integrate_even_line([](double s) { return 1.0 / (1.0 + 4.0 * kPi * kPi * s * s); }, spec);
    CHECK(v == Catch::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("oscillatory product of two sincs") {
    // int sinc(pi a s) sinc(pi b s) ds = 1/max(a,b) for the sin(pi a s)/(pi a s) kernel
    QuadratureSpec spec;
    spec.rel_tol = 3e-7;
    spec.tail_eps = 1e-9;
    auto sinc = [](double z) { return std::abs(z) < 1e-12 ? 1.0 : std::sin(z) / z; };
    const double v = integrate_even_line(
        [&](double s) { return sinc(kPi * s) * sinc(kPi * 0.5 * s); }, spec);
    CHECK(v == Catch::Approx(1.0).margin(2e-6));
}

TEST_CASE("tail criterion failure raises NotIntegrable") {
    QuadratureSpec spec;
    spec.max_levels = 10;
    CHECK_THROWS_AS(integrate_halfline([](double s) { return 1.0 / (1.0 + s); }, spec),
                    NotIntegrable);
}

TEST_CASE("two dimensional gaussian box integral") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-8;
    const double v = integrate_box_even(
        [](const std::vector<double>& s) { return std::exp(-s[0] * s[0] - s[1] * s[1]); }, 2,
        spec);
    CHECK(v == Catch::Approx(kPi).epsilon(1e-6));
}

TEST_CASE("three dimensional gaussian box integral") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-6;
    const double v = integrate_box_even(
        [](const std::vector<double>& s) {
            return std::exp(-s[0] * s[0] - s[1] * s[1] - s[2] * s[2]);
        },
        3, spec);
    CHECK(v == Catch::Approx(std::pow(kPi, 1.5)).epsilon(1e-5));
}

TEST_CASE("pairwise sum is order-stable") {
    std::vector<double> xs(1000);
    Rng rng(7);
    for (auto& x : xs) x = rng.normal();
    const double a = pairwise_sum(xs);
    const double b = pairwise_sum(xs);
    CHECK(a == b);
}
