#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "serfati/errors.hpp"
#include "serfati/geometry.hpp"

using namespace serfati;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("perp rotates a quarter turn counterclockwise") {
    CHECK(perp({1, 0}) == Vec2{0, 1});
    CHECK(perp({0, 1}) == Vec2{-1, 0});
    CHECK(perp({3, -4}) == Vec2{4, 3});
    Vec2 v{0.3, -1.7};
    CHECK(perp(perp(v)) == -v);
}

TEST_CASE("image point reflects across the unit circle") {
    Vec2 a = image_point({2, 0});
    CHECK(a.x1 == doctest::Approx(0.5));
    CHECK(a.x2 == 0.0);
    Vec2 b = image_point({0, -4});
    CHECK(b.x1 == 0.0);
    CHECK(b.x2 == doctest::Approx(-0.25));
    Vec2 u{std::cos(0.7), std::sin(0.7)};
    CHECK(norm(image_point(u) - u) < 1e-15);
    CHECK_THROWS_AS(image_point({0, 0}), DomainError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(0, 2 * kPi), rad(1, 50);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        double r = rad(rng), t = ang(rng);
        Vec2 y{r * std::cos(t), r * std::sin(t)};
        worst = std::max(worst, norm(image_point(image_point(y)) - y) / r);
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("unit circle boundary parameterization") {
    Domain d = Domain::exterior_unit_disk();
    CHECK(d.boundary_length() == doctest::Approx(2 * kPi).epsilon(1e-14));
    auto nodes = boundary_sample(d, 4);
    REQUIRE(nodes.size() == 4);
    for (int k = 0; k < 4; ++k) {
        double th = k * kPi / 2;
        CHECK(norm(nodes[k].y - Vec2{std::cos(th), std::sin(th)}) < 1e-15);
        CHECK(norm(nodes[k].y) == doctest::Approx(1.0));
    }
    // n = -y, tau = -perp(n)
    CHECK(norm(nodes[0].y - Vec2{1, 0}) < 1e-15);
    CHECK(norm(nodes[0].n - Vec2{-1, 0}) < 1e-15);
    CHECK(norm(nodes[0].tau - (-1.0) * perp(nodes[0].n)) < 1e-15);
    CHECK(boundary_sample(Domain::full_plane(), 16).empty());
    CHECK_THROWS_AS(boundary_sample(d, 3), ConfigError);
}

TEST_CASE("ray clipping and tangent rays for the unit disk") {
    Domain d = Domain::exterior_unit_disk();
    auto iv = d.clip_ray({3, 0}, {-1, 0}, 0, 5);
    REQUIRE(iv.size() == 2);
    CHECK(iv[0].first == 0.0);
    CHECK(iv[0].second == doctest::Approx(2.0));
    CHECK(iv[1].first == doctest::Approx(4.0));
    CHECK(iv[1].second == 5.0);
    auto miss = d.clip_ray({3, 0}, {0, 1}, 0, 5);
    REQUIRE(miss.size() == 1);
    CHECK(miss[0].second == 5.0);
    auto ang = d.tangent_angles({2, 0});
    REQUIRE(ang.size() == 2);
    CHECK(ang[0] == doctest::Approx(kPi - kPi / 6));
    CHECK(ang[1] == doctest::Approx(kPi + kPi / 6));
    CHECK(d.contains({1.5, 0}));
    CHECK_FALSE(d.contains({0.5, 0}));
    CHECK(d.boundary_distance({0, 3}) == doctest::Approx(2.0));
}

TEST_CASE("joukowski ellipse map") {
    auto T = joukowski_ellipse_map();
    auto [A, B] = T->ellipse_axes();
    CHECK(A == doctest::Approx(1.5));
    CHECK(B == doctest::Approx(1.0));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0, 2 * kPi), rad(1.0, 30.0);

    SUBCASE("forward inverts the inverse map and lands outside the unit disk") {
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            double r = rad(rng), t = ang(rng);
            Vec2 w{r * std::cos(t), r * std::sin(t)};
            Vec2 z = T->inverse(w);
            Vec2 back = T->forward(z);
            worst = std::max(worst, norm(back - w) / r);
            CHECK(norm(back) >= 1.0 - 1e-14);
        }
        CHECK(worst <= 1e-10);
    }
    SUBCASE("jacobian is conformal and matches finite differences") {
        double cr = 0, fd = 0;
        for (int i = 0; i < 1000; ++i) {
            double r = rad(rng) + 0.05, t = ang(rng);
            Vec2 x = T->inverse({r * std::cos(t), r * std::sin(t)});
            Mat2 J = T->jacobian(x);
            cr = std::max({cr, std::abs(J(0, 0) - J(1, 1)), std::abs(J(0, 1) + J(1, 0))});
            const double h = 1e-6;
            for (int p = 0; p < 2; ++p) {
                Vec2 e = p == 0 ? Vec2{h, 0} : Vec2{0, h};
                Vec2 col = (T->forward(x + e) - T->forward(x - e)) / (2 * h);
                fd = std::max({fd, std::abs(col.x1 - J(0, p)), std::abs(col.x2 - J(1, p))});
            }
        }
        CHECK(cr <= 1e-8);
        CHECK(fd <= 1e-7);
    }
    SUBCASE("second derivative matches finite differences of the jacobian") {
        double worst = 0;
        for (int i = 0; i < 200; ++i) {
            double r = rad(rng) + 0.05, t = ang(rng);
            Vec2 x = T->inverse({r * std::cos(t), r * std::sin(t)});
            Tensor3 D2 = T->second_derivative(x);
            const double h = 1e-5;
            for (int p = 0; p < 2; ++p) {
                Vec2 e = p == 0 ? Vec2{h, 0} : Vec2{0, h};
                Mat2 dj = (1.0 / (2 * h)) * (T->jacobian(x + e) - T->jacobian(x - e));
                for (int k = 0; k < 2; ++k)
                    for (int m = 0; m < 2; ++m)
                        worst = std::max(worst, std::abs(dj(k, m) - D2[k](m, p)));
            }
        }
        CHECK(worst <= 1e-6);
    }
    SUBCASE("second derivative decays like the inverse cube") {
        double prev = 1e300;
        for (double r : {10.0, 20.0, 40.0}) {
            double ratio = 0;
            for (int k = 0; k < 64; ++k) {
                double t = 2 * kPi * k / 64;
                Vec2 y{r * std::cos(t), r * std::sin(t)};
                ratio = std::max(ratio, frobenius(T->second_derivative(y)) * r * r * r);
            }
            CHECK(ratio <= prev * (1 + 1e-9));
            prev = ratio;
        }
    }
    SUBCASE("bi-Lipschitz constants hold on sampled fluid pairs") {
        Domain d = Domain::exterior_obstacle(T);
        int checked = 0;
        for (int i = 0; i < 2000; ++i) {
            double r1 = rad(rng) * 0.2 + 1.0, r2 = rad(rng) * 0.2 + 1.0;
            double a1 = ang(rng), a2 = ang(rng);
            Vec2 x = T->inverse({r1 * std::cos(a1), r1 * std::sin(a1)});
            Vec2 y = T->inverse({r2 * std::cos(a2), r2 * std::sin(a2)});
            REQUIRE(d.contains(x));
            double dz = norm(x - y), dw = norm(T->forward(x) - T->forward(y));
            CHECK(dw <= T->lip_upper() * dz * (1 + 1e-12));
            CHECK(dw >= T->lip_lower() * dz * (1 - 1e-12));
            ++checked;
        }
        CHECK(checked == 2000);
    }
}

TEST_CASE("ellipse boundary by arc length") {
    Domain d = Domain::exterior_obstacle(joukowski_ellipse_map());
    double A = 1.5, B = 1.0;
    double k = std::sqrt(1 - B * B / (A * A));
    CHECK(d.boundary_length() == doctest::Approx(4 * A * std::comp_ellint_2(k)).epsilon(1e-12));
    const int m = 64;
    auto nodes = boundary_sample(d, m);
    for (int i = 0; i < m; ++i) {
        const auto& b = nodes[i];
        CHECK(b.y.x1 * b.y.x1 / (A * A) + b.y.x2 * b.y.x2 / (B * B) == doctest::Approx(1.0));
        CHECK(norm(b.tau) == doctest::Approx(1.0));
        CHECK(std::abs(dot(b.tau, b.n)) < 1e-14);
        CHECK(b.y.x1 * b.tau.x2 - b.y.x2 * b.tau.x1 > 0);  // counterclockwise
        CHECK(dot(b.n, b.y) < 0);                        // points into the obstacle
        // equispaced in arc length: chords nearly equal to L/m
        Vec2 nxt = nodes[(i + 1) % m].y;
        CHECK(norm(nxt - b.y) == doctest::Approx(d.boundary_length() / m).epsilon(5e-3));
    }
    CHECK(d.boundary_distance({3, 0}) == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(d.boundary_distance({0, 2}) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d.boundary_distance({0, 0}) < 0);
    auto ang = d.tangent_angles({3, 0});
    REQUIRE(ang.size() == 2);
    // tangent lines from (3, 0) to x^2/A^2 + y^2 = 1 touch at x = A^2/3
    double xt = A * A / 3, yt = B * std::sqrt(1 - xt * xt / (A * A));
    CHECK(ang[1] == doctest::Approx(std::atan2(-yt, xt - 3) + 2 * kPi));
    CHECK(ang[0] == doctest::Approx(std::atan2(yt, xt - 3)));
}
