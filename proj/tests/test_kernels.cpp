#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "serfati/errors.hpp"
#include "serfati/kernels.hpp"

using namespace serfati;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Mat2& a) {
    return std::max({std::abs(a(0, 0)), std::abs(a(0, 1)), std::abs(a(1, 0)), std::abs(a(1, 1))});
}

// Second derivatives in y of f(y) = (1 - a_eps(x - y)) V^j(x, y) by central differences,
// arranged as the weight of grad grad^perp.
Mat2 fd_weight(const Domain& d, const Cutoff& c, double eps, Vec2 x, Vec2 y, int j, KernelKind kind,
               double h) {
    auto f = [&](Vec2 q) { return (1.0 - cutoff_eval(c, eps, x - q)) * kernel_value(d, kind, x, q)[j]; };
    Mat2 H;
    Vec2 e[2] = {{h, 0}, {0, h}};
    for (int m = 0; m < 2; ++m)
        for (int p = 0; p < 2; ++p)
            H(m, p) = (f(y + e[m] + e[p]) - f(y + e[m] - e[p]) - f(y - e[m] + e[p]) +
                       f(y - e[m] - e[p])) /
                      (4 * h * h);
    return Mat2::from(-H(0, 1), H(0, 0), -H(1, 1), H(1, 0));
}

}  // namespace

TEST_CASE("free kernel values") {
    Vec2 a = k_free({1, 0});
    CHECK(a.x1 == 0.0);
    CHECK(a.x2 == doctest::Approx(0.159155).epsilon(1e-6));
    Vec2 b = k_free({0, 2});
    CHECK(b.x1 == doctest::Approx(-0.079577).epsilon(1e-5));
    CHECK(b.x2 == doctest::Approx(0.0));
    CHECK_THROWS_AS(k_free({0, 0}), SingularityError);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        Vec2 x{g(rng), g(rng)};
        CHECK(norm(k_free(-x) + k_free(x)) == 0.0);
        CHECK(norm(k_free(x)) == doctest::Approx(1 / (2 * kPi * norm(x))));
    }
}

TEST_CASE("disk exterior kernels at the reference pair") {
    Domain d = Domain::exterior_unit_disk();
    Vec2 x{2, 0}, y{0, 2};
    Vec2 expect_k{1 / (8 * kPi) - 0.5 / (8.5 * kPi), 1 / (8 * kPi) - 2 / (8.5 * kPi)};
    Vec2 k = k_domain(d, x, y);
    CHECK(k.x1 == doctest::Approx(0.021065).epsilon(1e-4));
    CHECK(k.x2 == doctest::Approx(-0.035107).epsilon(1e-4));
    CHECK(norm(k - expect_k) < 1e-15);

    Vec2 kb = kbar(d, x);
    CHECK(kb.x1 == 0.0);
    CHECK(kb.x2 == doctest::Approx(1 / (4 * kPi)));
    Vec2 j = j_kernel(d, x, y);
    CHECK(j.x1 == doctest::Approx(0.021065).epsilon(1e-4));
    CHECK(j.x2 == doctest::Approx(0.044470).epsilon(1e-4));
    Vec2 l = l_kernel(x, y);
    CHECK(l.x1 == doctest::Approx(0.5 / (8.5 * kPi)));
    CHECK(l.x2 == doctest::Approx(2 / (8.5 * kPi) - 1 / (4 * kPi)));
    CHECK(l.x1 == doctest::Approx(0.018724).epsilon(1e-4));
    CHECK(l.x2 == doctest::Approx(-0.004681).epsilon(1e-3));

    Domain plane = Domain::full_plane();
    CHECK(norm(k_domain(plane, {1, 0}, {0, 0}) - k_free({1, 0})) == 0.0);
    CHECK(norm(kbar(plane, x)) == 0.0);

    Domain ident = Domain::exterior_obstacle(identity_map());
    CHECK(norm(k_domain(ident, x, y) - k) < 1e-12);
    CHECK_THROWS_AS(k_domain(d, x, x), SingularityError);
}

TEST_CASE("hydrodynamic kernel equals the background field on the boundary") {
    Domain d = Domain::exterior_unit_disk();
    CHECK(norm(j_kernel(d, {2, 0}, {0, 1}) - kbar(d, {2, 0})) < 1e-10);
    Domain e = Domain::exterior_obstacle(joukowski_ellipse_map());
    for (const auto& b : boundary_sample(e, 32)) {
        Vec2 x{2.5, 0.7};
        CHECK(norm(j_kernel(e, x, b.y) - kbar(e, x)) < 1e-10);
    }
}

TEST_CASE("background field has unit circulation and decays") {
    for (const Domain& d : {Domain::exterior_unit_disk(),
                            Domain::exterior_obstacle(joukowski_ellipse_map())}) {
        const int m = 2048;
        auto nodes = boundary_sample(d, m);
        double circ = 0;
        for (const auto& b : nodes) circ += dot(kbar(d, b.y), b.tau) * d.boundary_length() / m;
        CHECK(circ == doctest::Approx(1.0).epsilon(1e-8));
        double prev = 1e300;
        for (double r : {10.0, 100.0, 1000.0}) {
            double v = norm(kbar(d, {r, 0.3 * r}));
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("kernel decay sweeps") {
    Domain d = Domain::exterior_unit_disk();
    Vec2 x{2, 0};
    double prev_l = 1e300;
    for (double s : {10.0, 100.0, 1000.0}) {
        Vec2 y{0, s};
        double ratio = norm(j_kernel(d, x, y)) * norm(x - y);
        CHECK(ratio < 1.0);
        double l = norm(l_kernel(x, y));
        CHECK(l < prev_l);
        prev_l = l;
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0, 2 * kPi), rad(1, 20);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        double r1 = rad(rng) + 0.01, r2 = rad(rng), t1 = ang(rng), t2 = ang(rng);
        Vec2 a{r1 * std::cos(t1), r1 * std::sin(t1)}, b{r2 * std::cos(t2), r2 * std::sin(t2)};
        worst = std::max(worst, norm(j_kernel(d, a, b) - (k_free(a - b) - l_kernel(a, b))));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("derivatives of N") {
    Mat2 g = grad_n({1, 0});
    CHECK(g(0, 0) == doctest::Approx(-1 / (2 * kPi)));
    CHECK(g(1, 1) == doctest::Approx(1 / (2 * kPi)));
    CHECK(g(0, 1) == 0.0);
    CHECK(g(1, 0) == 0.0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gs;
    auto N = [](Vec2 z) { return z / (2 * kPi * norm2(z)); };
    for (int i = 0; i < 100; ++i) {
        Vec2 z{gs(rng), gs(rng)};
        Mat2 gz = grad_n(z);
        CHECK(std::abs(gz(0, 0) + gz(1, 1)) < 1e-12 * max_abs(gz));
        if (i >= 50) continue;
        const double h = 1e-5 * norm(z);
        Tensor3 t = hess_n(z);
        for (int p = 0; p < 2; ++p) {
            Vec2 e = p == 0 ? Vec2{h, 0} : Vec2{0, h};
            Mat2 dg = (1.0 / (2 * h)) * (grad_n(z + e) - grad_n(z - e));
            // first-derivative check of N itself
            Vec2 dn = (N(z + e) - N(z - e)) / (2 * h);
            CHECK(std::abs(dn.x1 - gz(0, p)) <= 1e-6 * max_abs(gz));
            CHECK(std::abs(dn.x2 - gz(1, p)) <= 1e-6 * max_abs(gz));
            for (int j = 0; j < 2; ++j)
                for (int m = 0; m < 2; ++m)
                    CHECK(std::abs(dg(j, m) - t[j](m, p)) <=
                          1e-6 * std::max(max_abs(t[0]), max_abs(t[1])));
        }
    }
    CHECK_THROWS_AS(grad_n({0, 0}), SingularityError);
    CHECK_THROWS_AS(hess_n({0, 0}), SingularityError);
}

TEST_CASE("cutoff profile") {
    Cutoff c = Cutoff::standard();
    CHECK(c.c_inner() == 0.5);
    CHECK(c.c_outer() == 1.0);
    CHECK(cutoff_eval(c, 2.0, {0.9, 0.3}) == 1.0);
    CHECK(cutoff_eval(c, 2.0, {2.0, 0.1}) == 0.0);
    CHECK(norm(cutoff_grad(c, 2.0, {2.0, 0.1})) == 0.0);
    CHECK_THROWS_AS(Cutoff(1.0, 0.5), ConfigError);

    double worst1 = 0, worst2 = 0, prev = 1.0;
    for (int i = 1; i < 1000; ++i) {
        double r = 0.5 + 0.5 * i / 1000.0;
        double a = c.profile(r);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        CHECK(a <= prev);
        prev = a;
        const double h = 1e-5;
        double fd1 = (c.profile(r + h) - c.profile(r - h)) / (2 * h);
        double fd2 = (c.d1(r + h) - c.d1(r - h)) / (2 * h);
        worst1 = std::max(worst1, std::abs(fd1 - c.d1(r)) / std::max(1.0, std::abs(c.d1(r))));
        worst2 = std::max(worst2, std::abs(fd2 - c.d2(r)) / std::max(1.0, std::abs(c.d2(r))));
    }
    CHECK(worst1 <= 1e-6);
    CHECK(worst2 <= 1e-6);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ue(0.1, 5), uv(-1, 1);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        double eps = ue(rng);
        Vec2 w{uv(rng), uv(rng)};
        if (norm(w) < 0.51 || norm(w) > 0.99) w = (0.75 / norm(w)) * w;
        Vec2 lhs = cutoff_grad(c, eps, eps * w);
        Vec2 rhs = (1.0 / eps) * cutoff_grad(c, 1.0, w);
        worst = std::max(worst, norm(lhs - rhs) / norm(rhs));
    }
    CHECK(worst <= 1e-12);

    // hessian against differences of the gradient
    for (double r : {0.55, 0.7, 0.9}) {
        Vec2 v{r * 0.6, r * 0.8};
        Mat2 H = cutoff_hess(c, 1.0, v);
        const double h = 1e-6;
        for (int p = 0; p < 2; ++p) {
            Vec2 e = p == 0 ? Vec2{h, 0} : Vec2{0, h};
            Vec2 dg = (cutoff_grad(c, 1.0, v + e) - cutoff_grad(c, 1.0, v - e)) / (2 * h);
            CHECK(dg.x1 == doctest::Approx(H(0, p)).epsilon(1e-6));
            CHECK(dg.x2 == doctest::Approx(H(1, p)).epsilon(1e-6));
        }
    }
}

TEST_CASE("far-field weight") {
    Cutoff c = Cutoff::standard();
    SUBCASE("vanishes on the plateau, including coincident points") {
        Domain p = Domain::full_plane();
        CHECK(max_abs(farfield_weight(p, c, 1.0, {0, 0}, {0.2, 0.1}, 0)) == 0.0);
        CHECK(max_abs(farfield_weight(p, c, 1.0, {0, 0}, {0, 0}, 1)) == 0.0);
        CHECK_THROWS_AS(farfield_weight(p, c, 0.0, {0, 0}, {1, 0}, 0), SingularityError);
    }
    SUBCASE("matches finite differences of the cutoff product") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> ua(0, 2 * kPi), ur(0.55, 4.0);
        struct Case {
            Domain d;
            KernelKind kind;
        };
        std::vector<Case> cases = {
            {Domain::full_plane(), KernelKind::DomainK},
            {Domain::exterior_unit_disk(), KernelKind::DomainK},
            {Domain::exterior_unit_disk(), KernelKind::Hydrodynamic},
            {Domain::exterior_obstacle(joukowski_ellipse_map()), KernelKind::DomainK},
            {Domain::exterior_obstacle(joukowski_ellipse_map()), KernelKind::Hydrodynamic},
        };
        for (const auto& cs : cases) {
            double worst = 0;
            int n = 0;
            while (n < 50) {
                double eps = 1.0;
                Vec2 x{2.5 * std::cos(ua(rng)), 2.5 * std::sin(ua(rng))};
                double rr = ur(rng) * eps, t = ua(rng);
                Vec2 y = x + Vec2{rr * std::cos(t), rr * std::sin(t)};
                double s = rr / eps;
                if (std::abs(s - 0.5) < 0.02 || std::abs(s - 1.0) < 0.02) continue;
                if (cs.d.has_boundary() && cs.d.boundary_distance(y) < 0.05) continue;
                for (int j = 0; j < 2; ++j) {
                    Mat2 w = farfield_weight(cs.d, c, eps, x, y, j, cs.kind);
                    Mat2 f = fd_weight(cs.d, c, eps, x, y, j, cs.kind, 1e-4);
                    worst = std::max(worst, max_abs(w - f) / std::max(max_abs(w), 1e-3));
                }
                ++n;
            }
            INFO(cs.d.name(), " ", to_string(cs.kind));
            CHECK(worst <= 1e-5);
        }
    }
    SUBCASE("identity-map obstacle reproduces the disk") {
        Domain d = Domain::exterior_unit_disk();
        Domain o = Domain::exterior_obstacle(identity_map());
        Vec2 x{1.7, -0.4};
        for (Vec2 y : {Vec2{3, 1}, Vec2{-1.2, 0.3}, Vec2{0.2, 5}})
            for (int j = 0; j < 2; ++j)
                CHECK(max_abs(farfield_weight(d, c, 0.7, x, y, j, KernelKind::Hydrodynamic) -
                              farfield_weight(o, c, 0.7, x, y, j, KernelKind::Hydrodynamic)) <=
                      1e-12);
    }
    SUBCASE("inverse-cube decay on the disk exterior") {
        Domain d = Domain::exterior_unit_disk();
        Vec2 x{3, 0};
        std::vector<double> ratios;
        for (double r : {5.0, 10.0, 20.0}) {
            double worst = 0;
            for (int k = 0; k < 32; ++k) {
                double t = 2 * kPi * (k + 0.5) / 32;
                Vec2 y = x + Vec2{r * std::cos(t), r * std::sin(t)};
                if (!d.contains(y)) continue;
                for (int j = 0; j < 2; ++j)
                    worst = std::max(worst, max_abs(farfield_weight(d, c, 1.0, x, y, j)) * r * r * r);
            }
            ratios.push_back(worst);
        }
        CHECK(ratios[2] <= 2 * ratios[0]);
        CHECK(ratios[1] <= 2 * ratios[0]);
    }
}
