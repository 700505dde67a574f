// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]; no arguments runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "serfati/bounds.hpp"
#include "serfati/estimates.hpp"
#include "serfati/fields.hpp"
#include "serfati/initdata.hpp"
#include "serfati/scenarios.hpp"
#include "serfati/serfati.hpp"
#include "serfati/solver.hpp"

using namespace serfati;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sup_norm(const std::vector<Vec2>& v) {
    double m = 0.0;
    for (Vec2 x : v) m = std::max(m, norm(x));
    return m;
}

// Finished blob runs shared by criteria 1, 2 and 13.
struct BlobRun {
    std::unique_ptr<Solver> solver;
    std::vector<Vec2> u;  // velocity per grid node at the final time
    double runtime = 0.0;
};

std::map<std::string, BlobRun> g_blob_runs;

const BlobRun& blob_run(double h, double dt, double eps, double T) {
    std::string key = fmt("%g/%g/%g/%g", h, dt, eps, T);
    auto it = g_blob_runs.find(key);
    if (it != g_blob_runs.end()) return it->second;
    auto t0 = std::chrono::steady_clock::now();
    RunConfig c;
    c.scenario = "blob";
    c.h = h;
    c.half_width = 2.0;
    c.dt = dt;
    c.eps = eps;
    c.t_final = T;
    Scenario sc = build_scenario(c.scenario);
    BlobRun r;
    r.solver = std::make_unique<Solver>(sc, resolved(c, sc));
    r.solver->advance_to(T);
    r.u = r.solver->node_velocity();
    r.runtime = seconds_since(t0);
    return g_blob_runs.emplace(key, std::move(r)).first->second;
}

// Velocity at every node of `coarse` from a finer run on the same window.
std::vector<Vec2> restrict_to(const Solver& fine, const std::vector<Vec2>& u, const Grid& coarse) {
    const SimState& st = fine.state();
    std::vector<Vec2> out;
    std::map<std::pair<long, long>, Vec2> byx;
    for (std::size_t k = 0; k < st.grid.size(); ++k) {
        Vec2 x = st.grid.node(k);
        byx[{std::lround(x.x1 * 1024), std::lround(x.x2 * 1024)}] = u[k];
    }
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        Vec2 x = coarse.node(k);
        out.push_back(byx.at({std::lround(x.x1 * 1024), std::lround(x.x2 * 1024)}));
    }
    return out;
}

Outcome criterion1() {
    const BlobRun& r = blob_run(1.0 / 32.0, 1.0 / 128.0, 0.5, 0.5);
    const SimState& st = r.solver->state();
    // classical Biot-Savart of the transported vorticity; its support stays near the unit disk
    CompactVorticity w{[&st](Vec2 x) { return st.vorticity.at(x); }, {0, 0}, 1.25};
    double err = 0.0;
    for (std::size_t k = 0; k < st.grid.size(); ++k) {
        if (!st.active[k]) continue;
        Vec2 ref = direct_biot_savart(st.domain, w, st.grid.node(k));
        err = std::max(err, norm(r.u[k] - ref));
    }
    double rel = err / sup_norm(r.u);
    bool ok = rel <= 1e-2 && r.runtime <= 600.0;
    return {ok, fmt("sup |u - K*omega| / sup |u| = %.3e (<= 1e-2), %dx%d nodes, run %.1f s (<= 600 s)", rel,
                    st.grid.nx, st.grid.ny, r.runtime)};
}

Outcome criterion2() {
    const BlobRun& a = blob_run(1.0 / 32.0, 1.0 / 128.0, 0.5, 0.5);
    const BlobRun& b = blob_run(1.0 / 32.0, 1.0 / 128.0, 1.0, 0.5);
    double diff = 0.0;
    for (std::size_t j = 0; j < a.u.size(); ++j) diff = std::max(diff, norm(a.u[j] - b.u[j]));
    Budget ba = a.solver->budget(), bb = b.solver->budget();
    double allowed = ba.total() + bb.total();
    double cap = 2e-2 * sup_norm(a.u);
    bool ok = diff <= allowed && ba.total() <= cap && bb.total() <= cap;
    return {ok, fmt("sup |u(eps=0.5) - u(eps=1)| = %.3e <= budgets %.3e + %.3e; each budget <= %.3e", diff,
                    ba.total(), bb.total(), cap)};
}

Outcome criterion3() {
    RunConfig c;
    c.scenario = "radial-exterior";
    c.h = 1.0 / 16.0;
    c.dt = 1.0 / 128.0;
    c.t_final = 1.0;
    c.compute_budget = false;
    Scenario sc = build_scenario(c.scenario);
    Solver s(sc, resolved(c, sc));
    const SimState& st = s.state();
    double circ0 = conservation_report(st).circulation;
    double err = 0.0, normal = 0.0, drift = 0.0;
    auto measure = [&]() {
        std::vector<Vec2> u = s.node_velocity();
        for (std::size_t k = 0; k < st.grid.size(); ++k)
            if (st.active[k]) err = std::max(err, norm(u[k] - sc.u0(st.grid.node(k))));
        for (std::size_t i = 0; i < st.boundary.size(); ++i)
            normal = std::max(normal, std::abs(dot(st.boundary_velocity[i], st.boundary[i].n)));
        drift = std::max(drift, std::abs(conservation_report(st).circulation - circ0));
    };
    measure();
    while (st.t < 1.0 - 1e-12) {
        s.step();
        if (st.steps % 8 == 0) measure();
    }
    bool ok = err <= 5e-3 && normal <= 1e-6 && drift <= 1e-3;
    return {ok, fmt("%dx%d nodes: sup |u(t) - u0| = %.3e (<= 5e-3), |u.n| = %.3e (<= 1e-6), circulation drift "
                    "%.3e (<= 1e-3)",
                    st.grid.nx, st.grid.ny, err, normal, drift)};
}

// Coarse runs of every shipped scenario, shared by criteria 4 and 9.
struct ScenarioRun {
    std::string name;
    double worst_excess = 0.0;  // max over steps and nodes of |omega| - sup |omega0|
    double residual = 0.0;
    double budget = 0.0;
};

std::vector<ScenarioRun> g_scenario_runs;

const std::vector<ScenarioRun>& scenario_runs() {
    if (!g_scenario_runs.empty()) return g_scenario_runs;
    for (const auto& name : list_scenarios()) {
        RunConfig c;
        c.scenario = name;
        c.h = 1.0 / 8.0;
        c.dt = 1.0 / 32.0;
        c.t_final = 0.25;
        Scenario sc = build_scenario(name);
        Solver s(sc, resolved(c, sc));
        const SimState& st = s.state();
        ScenarioRun r;
        r.name = name;
        r.worst_excess = -sc.omega_sup;
        auto scan = [&]() {
            for (std::size_t k = 0; k < st.grid.size(); ++k)
                if (st.active[k]) r.worst_excess = std::max(r.worst_excess, std::abs(st.vorticity.at_node(k)) - sc.omega_sup);
        };
        scan();
        while (st.t < c.t_final - 1e-12) {
            s.step();
            scan();
        }
        for (const auto& p : s.probe_records()) r.residual = std::max(r.residual, norm(p.residual));
        r.budget = s.budget().total();
        g_scenario_runs.push_back(r);
    }
    return g_scenario_runs;
}

Outcome criterion4() {
    bool ok = true;
    std::string detail;
    for (const auto& r : scenario_runs()) {
        ok = ok && r.worst_excess <= 0.0;
        detail += fmt("%s %.1e; ", r.name.c_str(), r.worst_excess);
    }
    return {ok, "max node |omega| - sup |omega0| (<= 0): " + detail};
}

Outcome criterion5() {
    auto t0 = std::chrono::steady_clock::now();
    Baselines base = load_baselines();
    CertifyOptions opt;
    opt.baselines = &base;
    std::vector<double> eps{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    auto near = certify_near_l1(Domain::full_plane(), KernelKind::DomainK, eps, {{0, 0}, {0.7, -1.3}}, opt);
    auto far = certify_far_l1(Domain::full_plane(), KernelKind::DomainK, eps, {{0, 0}}, opt);
    auto disk = certify_far_l1(Domain::exterior_unit_disk(), KernelKind::Hydrodynamic, {2.0, 4.0, 8.0},
                               {{1.5, 0.0}, {3.0, 0.0}}, opt);
    double rt = seconds_since(t0);
    bool near_ok = near.min_ratio() >= 0.5 - 1e-3 && near.max_ratio() <= 1.0 + 1e-3;
    bool far_ok = far.verdict == "bounded" && far.spread() <= 2.0;
    bool disk_ok = disk.verdict == "bounded";
    bool ok = near_ok && far_ok && disk_ok && rt <= 300.0;
    return {ok, fmt("near ratio in [%.4f, %.4f] (within [0.5, 1] +- 1e-3); far value*eps spread %.3f (<= 2), %s; "
                    "disk J far max %.3f vs %.3f, %s; %.1f s (<= 300 s)",
                    near.min_ratio(), near.max_ratio(), far.spread(), far.verdict.c_str(), disk.max_ratio(),
                    disk.fitted_constant, disk.verdict.c_str(), rt)};
}

Outcome criterion6() {
    double v = rearrangement_value(Domain::full_plane(), KernelKind::DomainK, {0, 0}, 1.0, 1.5);
    double exact = 2.0 / std::sqrt(2.0 * std::numbers::pi);
    return {std::abs(v - exact) <= 1e-4, fmt("value %.10f, closed form %.10f (+- 1e-4)", v, exact)};
}

Outcome criterion7() {
    Baselines base = load_baselines();
    CertifyOptions opt;
    opt.baselines = &base;
    auto rep = certify_hlog(Domain::full_plane(), {1e-2, 1e-3, 1e-4}, PairFamily::Rotation, opt);
    bool ok = rep.verdict == "bounded" && rep.spread() <= 2.0;
    return {ok, fmt("ratios %.4f %.4f %.4f, spread %.3f (<= 2), %s", rep.ratios[0], rep.ratios[1], rep.ratios[2],
                    rep.spread(), rep.verdict.c_str())};
}

Outcome criterion8() {
    double gap = product_bound_gap(3.0);
    return {std::abs(gap) <= 1e-12, fmt("|x||y| - (R - 1) = %.3e at R = 3 (<= 1e-12)", gap)};
}

Outcome criterion9() {
    Scenario sc = build_scenario("galilean-nonexample");
    Trajectory tr;
    for (int k = 0; k <= 16; ++k) {
        double t = k / 16.0;
        tr.times.push_back(t);
        tr.u.push_back([&sc, t](Vec2 x) { return sc.exact_velocity(t, x); });
        tr.omega.push_back(sc.omega0);
    }
    auto r = serfati_residual(sc.domain, Cutoff::standard(), sc.default_eps, tr, {0.5, 0.5},
                              QuadratureSpec{8, 128, 25.0});
    bool galilean = std::abs(r.residual.x1 - 1.0) <= 0.05 && std::abs(r.residual.x2) <= 0.05;
    bool ok = galilean;
    std::string detail = fmt("non-example residual (%.4f, %.1e) vs (1, 0) within 5%%; ", r.residual.x1, r.residual.x2);
    for (const auto& run : scenario_runs()) {
        if (run.name == "galilean-nonexample") continue;
        ok = ok && run.residual <= run.budget;
        detail += fmt("%s %.1e <= %.1e; ", run.name.c_str(), run.residual, run.budget);
    }
    return {ok, detail};
}

Outcome criterion10() {
    double worst = 0.0;
    for (double t : {0.2, 0.4, 0.6, 0.8, 1.0})
        for (double s0 : {1e-12, 1e-10, 1e-8, 1e-6, 1e-5}) {
            BoundParams p;
            p.s0 = s0;
            double c = osgood_gamma_closed(p, t), n = osgood_gamma_numeric(p, t);
            worst = std::max(worst, std::abs(c - n) / c);
        }
    OsgoodEquality e = osgood_equality_check(1e-3, 1.0);
    double ode = std::max(e.max_solution_error, e.max_conclusion_error);
    return {worst <= 1e-6 && ode <= 1e-6,
            fmt("Gamma closed vs numeric max rel %.2e (<= 1e-6); equality-case ODE %.2e (<= 1e-6)", worst, ode)};
}

Outcome criterion11() {
    bool ok = true;
    std::string detail;
    for (double s0 : {1e-3, 1e-4}) {
        RunConfig a;
        a.scenario = "blob";
        a.h = 1.0 / 16.0;
        a.dt = 1.0 / 64.0;
        a.t_final = 1.0;
        a.compute_budget = false;
        RunConfig b = a;
        b.s0 = s0;
        ComparisonReport rep = compare_runs(a, b, BoundParams{});
        ok = ok && rep.h_le_M;
        detail += fmt("s0 %.0e: max h - M %.1e;", s0, rep.max_h_minus_M);
        for (double t : {0.25, 0.5, 1.0}) {
            const ComparisonRow* row = nullptr;
            for (const auto& r : rep.rows)
                if (std::abs(r.t - t) < 1e-9) row = &r;
            bool in = row && row->branch && row->du <= row->bound;
            ok = ok && in;
            if (row) detail += fmt(" t=%.2f du %.2e <= %.2e", t, row->du, row->bound);
            else detail += fmt(" t=%.2f missing", t);
        }
        detail += "; ";
    }
    return {ok, detail};
}

Outcome criterion12() {
    ApproxReport r = approx_report(build_scenario("blob"));
    std::string detail;
    for (const auto& row : r.rows)
        detail += fmt("n=%d err %.2e |u_n|_S %.3f; ", row.n, row.err_compact, row.norm.total());
    detail += fmt("|u|_S %.3f; decreasing %d bounded %d compact %d", r.reference.total(), r.decreasing, r.bounded,
                  r.compact);
    return {r.decreasing && r.bounded && r.compact, detail};
}

Outcome criterion13() {
    const BlobRun& c = blob_run(1.0 / 8.0, 1.0 / 32.0, 0.5, 0.5);
    const BlobRun& m = blob_run(1.0 / 16.0, 1.0 / 64.0, 0.5, 0.5);
    const BlobRun& f = blob_run(1.0 / 32.0, 1.0 / 128.0, 0.5, 0.5);
    const Grid& g = c.solver->state().grid;
    std::vector<Vec2> um = restrict_to(*m.solver, m.u, g), uf = restrict_to(*f.solver, f.u, g);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        d1 = std::max(d1, norm(c.u[k] - um[k]));
        d2 = std::max(d2, norm(um[k] - uf[k]));
    }
    double ratio = d1 / d2;
    return {ratio >= 3.0, fmt("change h=1/8->1/16 %.3e, 1/16->1/32 %.3e, ratio %.2f (>= 3)", d1, d2, ratio)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2,  criterion3,  criterion4, criterion5,
                                                         criterion6, criterion7,  criterion8,  criterion9, criterion10,
                                                         criterion11, criterion12, criterion13};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
