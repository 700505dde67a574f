#include <doctest.h>

#include <cmath>

#include "serfati/errors.hpp"
#include "serfati/initdata.hpp"

using namespace serfati;

TEST_CASE("stream function of the radial exterior flow is |x| - 1") {
    Scenario sc = build_scenario("radial-exterior");
    CHECK(stream_function(sc.domain, sc.u0, {2.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(stream_function(sc.domain, sc.u0, {0.0, 3.0}) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(stream_function(sc.domain, sc.u0, {0.6, 0.8}) == 0.0);
    CHECK_THROWS_AS(stream_function(sc.domain, sc.u0, {0.1, 0.1}), DomainError);
}

TEST_CASE("stream function of a rigid rotation is |x|^2 / 2") {
    VectorFn u = [](Vec2 x) { return perp(x); };
    CHECK(stream_function(Domain::full_plane(), u, {1.0, 2.0}) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("perp grad of the stream function recovers the blob velocity") {
    Scenario sc = build_scenario("blob");
    const double d = 1e-4;
    for (Vec2 x : {Vec2{0.3, 0.1}, Vec2{-0.7, 0.5}, Vec2{1.5, -1.0}}) {
        auto psi = [&](Vec2 y) { return stream_function(sc.domain, sc.u0, y); };
        Vec2 g{(psi(x + Vec2{d, 0}) - psi(x - Vec2{d, 0})) / (2 * d),
               (psi(x + Vec2{0, d}) - psi(x - Vec2{0, d})) / (2 * d)};
        CHECK(norm(perp(g) - sc.u0(x)) <= 1e-4 * norm(sc.u0(x)));
    }
}

TEST_CASE("mollified stream function vanishes on the boundary and keeps linear profiles") {
    Domain disk = Domain::exterior_unit_disk();
    ScalarFn psi = [](Vec2 x) { return norm(x) - 1.0; };
    StreamFunction m = mollified_stream(disk, psi, 8);
    for (int k = 0; k < 16; ++k) {
        double th = 0.3 + k * 0.39;
        Vec2 b{std::cos(th), std::sin(th)};
        CHECK(std::abs(m.psi(b)) <= 1e-8);
        Vec2 x = 1.3 * b;
        CHECK(m.psi(x) == doctest::Approx(0.3).epsilon(1e-9));
    }
    CHECK_THROWS_AS(mollified_stream(disk, psi, 1), ChartError);
}

TEST_CASE("approximations of zero are zero") {
    VectorFn zero = [](Vec2) { return Vec2{}; };
    ApproxVelocity a = approx_velocity(Domain::full_plane(), zero, 4);
    for (Vec2 x : {Vec2{0, 0}, Vec2{1.2, -3.0}, Vec2{7.0, 0.5}}) {
        CHECK(norm(a.u(x)) == 0.0);
        CHECK(a.omega(x) == 0.0);
    }
}

TEST_CASE("approximations vanish exactly outside B_2n") {
    Scenario sc = build_scenario("radial-exterior");
    ApproxVelocity a = approx_velocity(sc.domain, sc.u0, 4);
    CHECK(a.support_radius == 8.0);
    for (Vec2 x : {Vec2{8.0, 0.0}, Vec2{0.0, -8.5}, Vec2{6.0, 6.0}}) {
        CHECK(norm(a.u(x)) == 0.0);
        CHECK(a.omega(x) == 0.0);
    }
    CHECK(norm(a.u({2.0, 0.0})) > 0.5);
}
