#include "serfati/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "serfati/errors.hpp"
#include "serfati/kernels.hpp"
#include "serfati/solver.hpp"

namespace serfati {

namespace {

constexpr double kPi = std::numbers::pi;

// sup |u| of the unit polynomial blob: max over r of G(r)/r
double blob_speed_max(double radius) {
    double best = 0.0;
    for (int k = 1; k <= 20000; ++k) {
        double r = radius * 1.5 * k / 20000.0;
        best = std::max(best, norm(blob_velocity({r, 0.0}, {0.0, 0.0}, radius)));
    }
    return best;
}

Scenario blob(double scale) {
    Scenario s;
    s.name = "blob";
    s.domain = Domain::full_plane();
    s.omega0 = [scale](Vec2 x) { return scale * blob_vorticity(x, {0, 0}, 1.0); };
    s.u0 = [scale](Vec2 x) { return scale * blob_velocity(x, {0, 0}, 1.0); };
    s.support_radius = 1.0;
    s.omega_sup = scale;
    s.stationary = true;
    auto u0 = s.u0;
    s.exact_velocity = [u0](double, Vec2 x) { return u0(x); };
    s.exact_labels = [scale](double t, Vec2 x) {
        double r = norm(x);
        if (r == 0.0) return x;
        double speed = scale * norm(blob_velocity(x, {0, 0}, 1.0));
        return rotate(x, -t * speed / r);
    };
    s.default_eps = 0.5;
    s.default_half_width = 2.0;
    s.notes = "radial polynomial vortex (1 - r^2)^4 on the unit disk; steady";
    return s;
}

Scenario blob_pair(double scale) {
    Scenario s;
    s.name = "blob-pair";
    s.domain = Domain::full_plane();
    const Vec2 c1{-0.7, 0.0}, c2{0.7, 0.0};
    const double rho = 0.5;
    s.omega0 = [=](Vec2 x) { return scale * (blob_vorticity(x, c1, rho) + blob_vorticity(x, c2, rho)); };
    s.u0 = [=](Vec2 x) { return scale * (blob_velocity(x, c1, rho) + blob_velocity(x, c2, rho)); };
    s.support_radius = 1.2;
    s.omega_sup = scale;
    s.default_eps = 0.5;
    s.default_half_width = 2.0;
    s.notes = "two co-rotating polynomial vortices of radius 1/2 centred at (-0.7, 0) and (0.7, 0)";
    return s;
}

Scenario strip(double scale) {
    Scenario s;
    s.name = "strip";
    s.domain = Domain::exterior_unit_disk();
    s.u0 = [scale](Vec2 x) {
        if (x.x2 >= 3.0) return Vec2{scale, 0.0};
        if (x.x2 > 2.0) return Vec2{scale * (x.x2 - 2.0), 0.0};
        return Vec2{0.0, 0.0};
    };
    s.omega0 = [scale](Vec2 x) { return (x.x2 > 2.0 && x.x2 < 3.0) ? -scale : 0.0; };
    s.omega_sup = scale;
    s.stationary = true;
    s.discontinuous_vorticity = true;
    auto u0 = s.u0;
    s.exact_velocity = [u0](double, Vec2 x) { return u0(x); };
    s.exact_labels = [u0](double t, Vec2 x) { return x - t * u0(x); };
    s.default_eps = 1.0;
    s.default_half_width = 4.0;
    s.default_truncation_radius = 800.0;
    s.notes = "shear layer on 2 < x2 < 3 outside the unit disk; vorticity -1 on the strip; steady";
    return s;
}

Scenario radial_exterior(double scale) {
    Scenario s;
    s.name = "radial-exterior";
    s.domain = Domain::exterior_unit_disk();
    s.u0 = [scale](Vec2 x) {
        double r = norm(x);
        return r > 0.0 ? (scale / r) * perp(x) : Vec2{};
    };
    s.omega0 = [scale](Vec2 x) {
        double r = norm(x);
        // r >= 1 on the fluid; the clamp absorbs rounding at projected boundary points
        return r > 0.0 ? std::min(scale, scale / r) : 0.0;
    };
    s.omega_sup = scale;
    s.stationary = true;
    auto u0 = s.u0;
    s.exact_velocity = [u0](double, Vec2 x) { return u0(x); };
    s.exact_labels = [scale](double t, Vec2 x) {
        double r = norm(x);
        return r > 0.0 ? rotate(x, -scale * t / r) : x;
    };
    s.default_eps = 1.0;
    s.default_half_width = 2.0;
    s.default_truncation_radius = 800.0;
    s.notes = "unit-speed circular flow outside the unit disk, vorticity 1/|x|; steady";
    return s;
}

Scenario disk_blob(double scale) {
    Scenario s;
    s.name = "disk-blob";
    s.domain = Domain::exterior_unit_disk();
    const Vec2 c{3.0, 0.0};
    const double rho = 0.5;
    const double m = blob_mass(rho);
    const Vec2 cs = image_point(c);
    s.omega0 = [=](Vec2 x) { return scale * blob_vorticity(x, c, rho); };
    // image part by the mean value property of y -> K(x - y*) over the radial bump
    s.u0 = [=](Vec2 x) { return scale * (blob_velocity(x, c, rho) - m * k_free(x - cs)); };
    s.support_radius = rho;
    s.support_center = c;
    s.omega_sup = scale;
    s.default_eps = 1.0;
    s.default_half_width = 4.0;
    s.notes = "polynomial vortex of radius 1/2 at (3, 0) outside the unit disk; Dirichlet velocity";
    return s;
}

Scenario ellipse_radial(double scale) {
    Scenario s;
    s.name = "ellipse-radial";
    auto T = joukowski_ellipse_map();
    s.domain = Domain::exterior_obstacle(T);
    Domain dom = s.domain;
    s.u0 = [=](Vec2 x) {
        Vec2 q = dom.contains(x) ? x : dom.project_to_boundary(x);
        Vec2 w = T->forward(q);
        return scale * (transpose(T->jacobian(q)) * (perp(w) / norm(w)));
    };
    s.omega0 = [=](Vec2 x) {
        if (!dom.contains(x)) x = dom.project_to_boundary(x);
        Complex d = T->derivative_c(to_complex(x));
        return std::min(scale, scale * std::norm(d) / norm(T->forward(x)));
    };
    // |T'| <= 1 / (R (1 - m)) = 1 and |T| >= 1 on the fluid
    s.omega_sup = scale;
    s.u0_valid_in_obstacle = false;
    s.default_eps = 1.0;
    s.default_half_width = 3.0;
    s.default_truncation_radius = 800.0;
    s.notes = "circular disk flow transplanted outside a 1.5 x 1.0 ellipse; not steady";
    return s;
}

Scenario periodic(double scale) {
    Scenario s;
    s.name = "periodic";
    s.domain = Domain::full_plane();
    s.u0 = [scale](Vec2 x) {
        return Vec2{0.5 * scale * std::sin(x.x1) * std::cos(x.x2),
                    -0.5 * scale * std::cos(x.x1) * std::sin(x.x2)};
    };
    s.omega0 = [scale](Vec2 x) { return scale * std::sin(x.x1) * std::sin(x.x2); };
    s.omega_sup = scale;
    s.stationary = true;
    s.experimental = true;
    auto u0 = s.u0;
    s.exact_velocity = [u0](double, Vec2 x) { return u0(x); };
    s.default_eps = 0.5;
    s.default_half_width = 2.0;
    s.notes = "cellular flow with zero mean vorticity per period; windowed, experimental";
    return s;
}

Scenario galilean() {
    Scenario s;
    s.name = "galilean-nonexample";
    s.domain = Domain::full_plane();
    s.u0 = [](Vec2) { return Vec2{}; };
    s.omega0 = [](Vec2) { return 0.0; };
    s.omega_sup = 0.0;
    s.exact_velocity = [](double t, Vec2) { return Vec2{t, 0.0}; };
    s.default_eps = 0.5;
    s.default_half_width = 2.0;
    s.notes = "u(t, x) = (t, 0) with pressure -x1 solves Euler but not the identity";
    return s;
}

}  // namespace

double blob_vorticity(Vec2 x, Vec2 center, double radius) {
    double q = norm2(x - center) / (radius * radius);
    if (q >= 1.0) return 0.0;
    double a = 1.0 - q;
    double a2 = a * a;
    return a2 * a2;
}

Vec2 blob_velocity(Vec2 x, Vec2 center, double radius) {
    Vec2 z = x - center;
    double r2 = norm2(z);
    double q = r2 / (radius * radius);
    // u = perp(z) G(r) / r^2 with G(r) = rho^2 (1 - (1 - q)^5) / 10
    double f;
    if (q < 1.0)
        f = (5.0 - 10.0 * q + 10.0 * q * q - 5.0 * q * q * q + q * q * q * q) / 10.0;
    else
        f = 1.0 / (10.0 * q);
    return f * perp(z);
}

double blob_mass(double radius) { return kPi * radius * radius / 5.0; }

std::vector<std::string> list_scenarios() {
    return {"blob", "blob-pair", "strip", "radial-exterior", "disk-blob", "ellipse-radial",
            "periodic", "galilean-nonexample"};
}

std::vector<std::string> list_negative_scenarios() {
    return {"constant-vorticity", "semi-infinite-strip"};
}

Scenario build_scenario(const std::string& name, const ScenarioParams& params) {
    if (name == "constant-vorticity")
        throw NotSerfatiError(
            "constant-vorticity: a nonzero constant vorticity forces velocity growing linearly at "
            "infinity, so no bounded velocity exists");
    if (name == "semi-infinite-strip")
        throw NotSerfatiError(
            "semi-infinite-strip: the indicator of (0, inf) x (0, 1) has no bounded velocity; the "
            "induced flow grows logarithmically near the strip's far end");
    if (params.s0 < 0.0) throw ConfigError("perturbation size must be non-negative");
    auto make = [&](double scale) -> Scenario {
        if (name == "blob") return blob(scale);
        if (name == "blob-pair") return blob_pair(scale);
        if (name == "strip") return strip(scale);
        if (name == "radial-exterior") return radial_exterior(scale);
        if (name == "disk-blob") return disk_blob(scale);
        if (name == "ellipse-radial") return ellipse_radial(scale);
        if (name == "periodic") return periodic(scale);
        if (name == "galilean-nonexample") return galilean();
        throw ConfigError("unknown scenario: " + name);
    };
    Scenario base = make(1.0);
    if (params.s0 == 0.0) return base;
    double nrm;
    if (name == "blob") nrm = blob_speed_max(1.0) + 1.0;
    else nrm = scenario_norm(base, 1.0 / 64.0).total();
    if (!(nrm > 0.0)) throw ConfigError("cannot perturb a scenario with zero norm");
    Scenario s = make(1.0 + params.s0 / nrm);
    s.notes += "; scaled by 1 + s0/|u0|_S";
    return s;
}

SerfatiNorm scenario_norm(const Scenario& sc, double h) {
    Grid g = Grid::square(sc.default_half_width, h);
    return serfati_norm(sc.domain, sc.u0, g);
}

ScenarioReport validate_scenario(const Scenario& sc, double h, const ValidateOptions& opt) {
    ScenarioReport rep;
    rep.name = sc.name;
    Grid g = Grid::square(sc.default_half_width, h);
    std::vector<Vec2> s(g.size());
    std::vector<char> act(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        Vec2 x = g.node(k);
        act[k] = sc.domain.contains(x);
        if (act[k]) s[k] = sc.u0(x);
    }
    rep.norm = serfati_norm(s, g, Window::all(g), &act);
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) {
            bool ok = act[g.index(i, j)] && act[g.index(i - 1, j)] && act[g.index(i + 1, j)] &&
                      act[g.index(i, j - 1)] && act[g.index(i, j + 1)];
            if (!ok) continue;
            rep.divergence = std::max(rep.divergence, std::abs(discrete_divergence(s, g, i, j)));
            Vec2 x = g.node(i, j);
            // skip stencils that straddle a jump of omega0
            double w = sc.omega0(x);
            bool jump = false;
            for (Vec2 d : {Vec2{h, 0}, Vec2{-h, 0}, Vec2{0, h}, Vec2{0, -h}})
                if (std::abs(sc.omega0(x + d) - w) > 0.5 * std::max(sc.omega_sup, 1e-300)) jump = true;
            if (jump) continue;
            rep.curl_error = std::max(rep.curl_error, std::abs(discrete_curl(s, g, i, j) - w));
        }
    for (const auto& b : boundary_sample(sc.domain, 256))
        rep.tangency = std::max(rep.tangency, std::abs(dot(sc.u0(b.y), b.n)));

    if (opt.run_solver && sc.exact_velocity) {
        RunConfig cfg;
        cfg.h = h;
        cfg.dt = opt.dt;
        cfg.t_final = opt.t_final;
        cfg.eps = sc.default_eps;
        cfg.half_width = sc.default_half_width;
        Solver solver(sc, cfg);
        for (double tr : {0.25, 0.5, 1.0}) {
            if (tr > opt.t_final + 1e-12) break;
            solver.advance_to(tr);
            double err = 0.0, ref = 0.0, lab = 0.0;
            const auto& st = solver.state();
            for (std::size_t k = 0; k < st.grid.size(); ++k) {
                if (!st.active[k]) continue;
                Vec2 x = st.grid.node(k);
                Vec2 ue = sc.exact_velocity(st.t, x);
                err = std::max(err, norm(st.velocity.at_node(k) - ue));
                ref = std::max(ref, norm(ue));
                if (sc.exact_labels)
                    lab = std::max(lab, norm(x + st.vorticity.disp.data[k] - sc.exact_labels(st.t, x)));
            }
            rep.ref_times.push_back(st.t);
            rep.ref_errors.push_back(ref > 0.0 ? err / ref : err);
            rep.label_errors.push_back(lab);
        }
    }
    return rep;
}

}  // namespace serfati
