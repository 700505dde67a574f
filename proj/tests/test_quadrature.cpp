#include <doctest.h>

#include <cmath>
#include <numbers>

#include "serfati/errors.hpp"
#include "serfati/kernels.hpp"
#include "serfati/quadrature.hpp"

using namespace serfati;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
    for (int n : {1, 3, 8, 20, 64}) {
        const auto& g = gauss_legendre(n);
        for (int deg = 0; deg < 2 * n; ++deg) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += g.w[i] * std::pow(g.x[i], deg);
            double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}

TEST_CASE("singular polar rule on the plane") {
    Domain p = Domain::full_plane();
    Vec2 c{0.3, -0.2};
    double R = 1.7;
    auto inv_r = [&](Vec2 y) { return 1.0 / norm(y - c); };
    CHECK(singular_polar_integral(p, c, R, inv_r) == doctest::Approx(2 * kPi * R).epsilon(1e-12));
    std::function<double(Vec2)> one = [](Vec2) { return 1.0; };
    CHECK(singular_polar_integral(p, c, R, one) == doctest::Approx(kPi * R * R).epsilon(1e-12));
    std::function<Vec2(Vec2)> kf = [&](Vec2 y) { return k_free(y - c); };
    CHECK(norm(singular_polar_integral(p, c, R, kf)) <= 1e-10);

    // smooth non-polynomial integrand: second order or better under refinement
    auto g = [&](Vec2 y) { return std::exp(y.x1) * std::cos(2 * y.x2); };
    double fine = singular_polar_integral(p, c, R, g, {64, 128, 1.0, {}});
    double e1 = std::abs(singular_polar_integral(p, c, R, g, {4, 8, 1.0, {}}) - fine);
    double e2 = std::abs(singular_polar_integral(p, c, R, g, {8, 16, 1.0, {}}) - fine);
    CHECK(e2 * 4 <= e1);
}

TEST_CASE("singular polar rule rejects non-integrable blow-up") {
    Domain p = Domain::full_plane();
    auto bad = [](Vec2 y) { return 1.0 / norm2(y) / norm(y); };
    CHECK_THROWS_AS(singular_polar_integral(p, {0, 0}, 1.0, bad), QuadratureError);
    auto nan = [](Vec2) { return std::nan(""); };
    CHECK_THROWS_AS(singular_polar_integral(p, {0, 0}, 1.0, nan), QuadratureError);
}

TEST_CASE("polar rule clips to the fluid") {
    Domain d = Domain::exterior_unit_disk();
    std::function<double(Vec2)> one = [](Vec2) { return 1.0; };
    // ball wholly inside the obstacle
    CHECK(singular_polar_integral(d, {0.1, 0}, 0.5, one) == 0.0);
    // ball of radius 2 about (1.5, 0) minus the lens with the unit disk
    double R = 2.0, dc = 1.5, r = 1.0;
    auto lens = [](double R1, double R2, double dd) {
        double a = R1 * R1 * std::acos((dd * dd + R1 * R1 - R2 * R2) / (2 * dd * R1));
        double b = R2 * R2 * std::acos((dd * dd + R2 * R2 - R1 * R1) / (2 * dd * R2));
        double c = 0.5 * std::sqrt((-dd + R1 + R2) * (dd + R1 - R2) * (dd - R1 + R2) * (dd + R1 + R2));
        return a + b - c;
    };
    double expect = kPi * R * R - lens(R, r, dc);
    CHECK(singular_polar_integral(d, {dc, 0}, R, one) == doctest::Approx(expect).epsilon(1e-9));
    Domain e = Domain::exterior_obstacle(joukowski_ellipse_map());
    // ball containing the whole ellipse: area minus pi A B
    CHECK(singular_polar_integral(e, {0.2, 0.1}, 3.0, one) ==
          doctest::Approx(9 * kPi - 1.5 * kPi).epsilon(1e-9));
}

TEST_CASE("truncated plane integral") {
    Domain p = Domain::full_plane();
    QuadratureSpec spec;
    spec.truncation_radius = 100;
    spec.tail_constant = 2 * kPi;
    Vec2 x{0.4, 0.9};
    auto f = [&](Vec2 y) { return std::pow(norm(x - y), -3.0); };
    auto res = truncated_plane_integral(p, x, 1.0, 1.0, spec, std::function<double(Vec2)>(f));
    CHECK(res.value == doctest::Approx(2 * kPi * (1 - 1.0 / 100)).epsilon(1e-10));
    CHECK(std::abs(res.value + res.tail_estimate - 2 * kPi) <= 1e-4);
    auto zero = truncated_plane_integral(p, x, 1.0, 1.0, spec, std::function<double(Vec2)>([](Vec2) { return 0.0; }));
    CHECK(zero.value == 0.0);
    QuadratureSpec big = spec;
    big.truncation_radius = 200;
    auto res2 = truncated_plane_integral(p, x, 1.0, 1.0, big, std::function<double(Vec2)>(f));
    CHECK(res2.tail_estimate == doctest::Approx(0.5 * res.tail_estimate));
    QuadratureSpec small = spec;
    small.truncation_radius = 0.8;
    CHECK_THROWS_AS(truncated_plane_integral(p, x, 0.5, 1.0, small, std::function<double(Vec2)>(f)),
                    ConfigError);
}

TEST_CASE("boundary line integral") {
    Domain d = Domain::exterior_unit_disk();
    auto one = boundary_line_integral(d, [](double, Vec2, Vec2, Vec2) { return 1.0; });
    CHECK(one.value == doctest::Approx(2 * kPi).epsilon(1e-12));
    CHECK_FALSE(one.no_boundary);
    Domain e = Domain::exterior_obstacle(joukowski_ellipse_map());
    double L = e.boundary_length();
    auto deriv = boundary_line_integral(e, [&](double s, Vec2, Vec2, Vec2) {
        double w = 2 * kPi / L;
        return w * std::cos(w * s) * std::exp(std::sin(w * s));
    });
    CHECK(std::abs(deriv.value) <= 1e-10);
    Cutoff c = Cutoff::standard();
    Vec2 x{4, 0};
    auto far = boundary_line_integral(d, [&](double, Vec2 y, Vec2 tau, Vec2) {
        return dot(cutoff_grad(c, 1.0, x - y), tau);
    });
    CHECK(far.value == 0.0);
    auto none = boundary_line_integral(Domain::full_plane(), [](double, Vec2, Vec2, Vec2) { return 1.0; });
    CHECK(none.value == 0.0);
    CHECK(none.no_boundary);
}

TEST_CASE("Lp norms of the free kernel") {
    Domain p = Domain::full_plane();
    Vec2 x{1, 2};
    auto absk = [&](Vec2 y) { return norm(k_free(x - y)); };
    CHECK(lp_norm(p, x, 1.3, absk, 1.0) == doctest::Approx(1.3).epsilon(1e-10));
    double v = std::pow(lp_norm(p, x, 1.0, absk, 1.5), 1.5);
    CHECK(v == doctest::Approx(2 / std::sqrt(2 * kPi)).epsilon(1e-4));
    CHECK(v == doctest::Approx(0.797885).epsilon(1e-5));
    CHECK(lp_norm(p, x, 2.0, [](Vec2) { return 1.0; }, 2.0) ==
          doctest::Approx(std::sqrt(4 * kPi)).epsilon(1e-12));
    CHECK_THROWS_AS(lp_norm(p, x, 1.0, absk, 0.5), ConfigError);
    // annulus
    CHECK(lp_norm_annulus(p, x, 0.5, 2.0, absk, 1.0) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("adaptive rectangle cubature") {
    auto res = adaptive_rectangle([](double a, double b) { return std::exp(a + b); }, 0, 1, 0, 2,
                                  1e-12, 1e-12);
    CHECK(res.value == doctest::Approx((std::exp(1) - 1) * (std::exp(2) - 1)).epsilon(1e-12));
    auto kink = adaptive_rectangle([](double a, double b) { return std::abs(a - b); }, 0, 1, 0, 1,
                                   1e-8, 1e-8);
    CHECK(kink.value == doctest::Approx(1.0 / 3).epsilon(1e-7));
}
