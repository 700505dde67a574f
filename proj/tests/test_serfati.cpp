#include <doctest.h>

#include <cmath>

#include "serfati/errors.hpp"
#include "serfati/scenarios.hpp"
#include "serfati/serfati.hpp"

using namespace serfati;

namespace {

Trajectory exact_trajectory(const Scenario& sc, double T, int steps) {
    Trajectory tr;
    for (int k = 0; k <= steps; ++k) {
        double t = T * k / steps;
        tr.times.push_back(t);
        tr.u.push_back([&sc, t](Vec2 x) { return sc.exact_velocity(t, x); });
        if (sc.exact_labels)
            tr.omega.push_back([&sc, t](Vec2 x) { return sc.omega0(sc.exact_labels(t, x)); });
        else
            tr.omega.push_back(sc.omega0);
    }
    return tr;
}

}  // namespace

TEST_CASE("the non-example leaves residual (t, 0)") {
    Scenario sc = build_scenario("galilean-nonexample");
    QuadratureSpec q{8, 128, 25.0};
    for (double T : {0.5, 1.0}) {
        auto r = serfati_residual(sc.domain, Cutoff::standard(), 0.5, exact_trajectory(sc, T, 8), {0.2, -0.1}, q);
        CHECK(r.residual.x1 == doctest::Approx(T).epsilon(0.05));
        CHECK(std::abs(r.residual.x2) < 0.05 * T);
    }
}

TEST_CASE("steady blob satisfies the identity on its exact trajectory") {
    Scenario sc = build_scenario("blob");
    QuadratureSpec q{8, 128, 25.0};
    auto r = serfati_residual(sc.domain, Cutoff::standard(), 0.5, exact_trajectory(sc, 0.5, 16), {0.3, 0.2}, q,
                              NearOptions{48, 96});
    CHECK(norm(r.residual) < 1e-5);
    CHECK(norm(r.far_accum) < 1e-5);
}

TEST_CASE("steady radial exterior flow satisfies the exterior identity") {
    Scenario sc = build_scenario("radial-exterior");
    QuadratureSpec q{8, 128, 800.0};
    auto r = serfati_residual(sc.domain, Cutoff::standard(), 1.0, exact_trajectory(sc, 0.5, 4), {1.5, 0.5}, q,
                              NearOptions{48, 96});
    CHECK(norm(r.residual) < 1e-4);
    CHECK(norm(r.boundary_accum) > 0.0);
}

TEST_CASE("near field vanishes when vorticity is unchanged") {
    auto w = [](Vec2 x) { return blob_vorticity(x, {0, 0}, 1.0); };
    Vec2 v = near_field_term(Domain::full_plane(), Cutoff::standard(), 0.5, {0.1, 0.1}, w, w, KernelKind::DomainK);
    CHECK(norm(v) == 0.0);
}

TEST_CASE("the near field is bounded by the L1 norm of the cut kernel") {
    // |near| <= sup |omega_t - omega_0| * eps * int a, and int a = 3/4 for the standard cutoff
    auto w1 = [](Vec2) { return 1.0; };
    auto w0 = [](Vec2) { return 0.0; };
    for (double eps : {0.25, 1.0}) {
        Vec2 v = near_field_term(Domain::full_plane(), Cutoff::standard(), eps, {0, 0}, w1, w0, KernelKind::DomainK);
        CHECK(norm(v) <= 0.75 * eps + 1e-12);
    }
}

TEST_CASE("invalid arguments are rejected") {
    VectorFn u = [](Vec2) { return Vec2{1, 0}; };
    Cutoff c = Cutoff::standard();
    CHECK_THROWS_AS(boundary_increment(Domain::full_plane(), c, 1.0, {2, 0}, u, 0.1), ConfigError);
    CHECK_THROWS_AS(far_field_increment(Domain::full_plane(), c, 0.0, {0, 0}, u, 0.1, QuadratureSpec{}),
                    ConfigError);
    CHECK_THROWS_AS(far_field_increment(Domain::full_plane(), c, 1.0, {0, 0}, u, 0.1, QuadratureSpec{8, 64, 0.5}),
                    ConfigError);
}

TEST_CASE("constant flow gives no far-field increment") {
    VectorFn u = [](Vec2) { return Vec2{0.3, -0.2}; };
    auto f = far_field_increment(Domain::full_plane(), Cutoff::standard(), 0.5, {0.1, 0.4}, u, 1.0,
                                 QuadratureSpec{8, 128, 200.0});
    CHECK(norm(f.value) < 1e-6);
}

TEST_CASE("a-priori envelope is C exp(C t)") {
    SerfatiNorm n{0.5, 1.0};
    CHECK(apriori_velocity_bound(n, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK(apriori_velocity_bound(n, 1.0, 2.0) == doctest::Approx(2.0 * std::exp(2.0)));
    CHECK_THROWS_AS(apriori_velocity_bound(n, 1.0, 0.4), ConfigError);
}

TEST_CASE("online accumulator agrees with the batch residual") {
    Scenario sc = build_scenario("galilean-nonexample");
    QuadratureSpec q{8, 128, 25.0};
    Vec2 x{0.2, 0.3};
    Trajectory tr = exact_trajectory(sc, 1.0, 8);
    auto batch = serfati_residual(sc.domain, Cutoff::standard(), 0.5, tr, x, q);
    ResidualAccumulator acc(sc.domain, Cutoff::standard(), 0.5, x, q);
    acc.add(tr.u[0], 0.0);
    for (std::size_t k = 1; k < tr.times.size(); ++k) acc.add(tr.u[k], tr.times[k] - tr.times[k - 1]);
    auto online = acc.residual(tr.u.back(), tr.omega.back(), tr.omega.front(), tr.u.front());
    CHECK(norm(online.residual - batch.residual) < 1e-12);
}
