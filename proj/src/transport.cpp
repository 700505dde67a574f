#include "serfati/transport.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "serfati/errors.hpp"
#include "serfati/parallel.hpp"
#include "serfati/solver.hpp"

namespace serfati {

Vec2 trace_back(Vec2 x, double dt, const StepVelocity& v) {
    Vec2 k1 = v(x, 1.0);
    Vec2 k2 = v(x - (0.5 * dt) * k1, 0.5);
    Vec2 k3 = v(x - (0.5 * dt) * k2, 0.5);
    Vec2 k4 = v(x - dt * k3, 0.0);
    return x - (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec2 trace_forward(Vec2 x, double dt, const StepVelocity& v) {
    Vec2 k1 = v(x, 0.0);
    Vec2 k2 = v(x + (0.5 * dt) * k1, 0.5);
    Vec2 k3 = v(x + (0.5 * dt) * k2, 0.5);
    Vec2 k4 = v(x + dt * k3, 1.0);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

Vec2 clamp_to(const Grid& g, Vec2 x) {
    Vec2 up = g.upper();
    return {std::clamp(x.x1, g.origin.x1, up.x1), std::clamp(x.x2, g.origin.x2, up.x2)};
}

// Linear extrapolation from the nearest window point with one-sided slopes.
Vec2 extrapolated_disp(const GridField<Vec2>& disp, Vec2 foot) {
    const Grid& g = disp.grid;
    Vec2 c = clamp_to(g, foot);
    const Vec2 base = disp.interpolate(c);
    Vec2 d = base;
    Vec2 off = foot - c;
    if (off.x1 != 0.0) {
        double s = off.x1 > 0.0 ? g.h : -g.h;
        d += (off.x1 / s) * (base - disp.interpolate(c - Vec2{s, 0.0}));
    }
    if (off.x2 != 0.0) {
        double s = off.x2 > 0.0 ? g.h : -g.h;
        d += (off.x2 / s) * (base - disp.interpolate(c - Vec2{0.0, s}));
    }
    return d;
}

}  // namespace

LabelUpdate advance_labels(const Domain& domain, const GridField<Vec2>& disp,
                           const std::vector<char>& trace, const std::vector<char>& fluid,
                           const StepVelocity& v, double dt) {
    if (!(dt > 0.0)) throw ConfigError("label update needs dt > 0");
    const Grid& g = disp.grid;
    if (trace.size() != g.size() || fluid.size() != g.size())
        throw ConfigError("label masks do not match the grid");
    LabelUpdate out;
    out.disp = GridField<Vec2>(g);
    std::vector<char> hit(g.size(), 0);
    const bool obstacle = domain.has_boundary();
    parallel_for(g.size(), [&](std::size_t k) {
        if (!trace[k]) return;
        Vec2 x = g.node(k);
        Vec2 foot = trace_back(x, dt, v);
        bool wet = fluid[k] && obstacle;
        // projections within rounding of the boundary are not counted
        const double slack = 1e-9 * g.h;
        if (wet && !domain.contains(foot)) {
            Vec2 q = domain.project_to_boundary(foot);
            if (norm(q - foot) > slack) hit[k] = 1;
            foot = q;
        }
        Vec2 label = foot + extrapolated_disp(disp, foot);
        if (wet && !domain.contains(label)) {
            Vec2 q = domain.project_to_boundary(label);
            if (norm(q - label) > slack) hit[k] = 1;
            label = q;
        }
        out.disp.data[k] = label - x;
    });
    for (std::size_t k = 0; k < g.size(); ++k) {
        out.traced += trace[k] ? 1 : 0;
        out.penetrations += hit[k];
    }
    return out;
}

LabelUpdate advance_labels(const SimState& state, double dt) {
    const VelocityField& u = state.velocity;
    return advance_labels(state.domain, state.vorticity.disp, state.traced, state.active,
                          [&u](Vec2 x, double) { return u.at(x); }, dt);
}

double vorticity_at(const SimState& state, Vec2 x, bool* outside) {
    return state.vorticity.at(x, outside);
}

namespace {

double ll_quotient(Vec2 x, Vec2 y, Vec2 ux, Vec2 uy) {
    double d = norm(x - y);
    if (d == 0.0) return 0.0;
    double lg = d > 1.0 ? std::log(d) : 0.0;
    return norm(ux - uy) / ((1.0 + lg) * d);
}

}  // namespace

LogLipschitz ll_norm(const std::vector<Vec2>& points, const std::vector<Vec2>& values,
                     std::size_t pair_budget, std::uint64_t seed) {
    if (points.size() != values.size()) throw ConfigError("ll_norm needs one value per point");
    if (points.size() < 2) throw ConfigError("ll_norm needs at least two samples");
    LogLipschitz r;
    for (Vec2 v : values) r.sup = std::max(r.sup, norm(v));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    for (std::size_t n = 0; n < pair_budget; ++n) {
        std::size_t a = pick(rng), b = pick(rng);
        if (a == b) continue;
        r.quotient = std::max(r.quotient, ll_quotient(points[a], points[b], values[a], values[b]));
    }
    return r;
}

LogLipschitz ll_norm(const std::vector<Vec2>& samples, const Grid& grid,
                     const std::vector<char>* active, std::size_t pair_budget, std::uint64_t seed) {
    std::vector<Vec2> pts, vals;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (active && !(*active)[k]) continue;
        pts.push_back(grid.node(k));
        vals.push_back(samples[k]);
    }
    LogLipschitz r = ll_norm(pts, vals, pair_budget, seed);
    auto on = [&](int i, int j) { return !active || (*active)[grid.index(i, j)]; };
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            if (!on(i, j)) continue;
            std::size_t k = grid.index(i, j);
            if (i + 1 < grid.nx && on(i + 1, j)) {
                std::size_t m = grid.index(i + 1, j);
                r.quotient = std::max(r.quotient, ll_quotient(grid.node(k), grid.node(m), samples[k], samples[m]));
            }
            if (j + 1 < grid.ny && on(i, j + 1)) {
                std::size_t m = grid.index(i, j + 1);
                r.quotient = std::max(r.quotient, ll_quotient(grid.node(k), grid.node(m), samples[k], samples[m]));
            }
        }
    return r;
}

double area_distortion(const GridField<Vec2>& disp, const std::vector<char>& active) {
    const Grid& g = disp.grid;
    double worst = 0.0;
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) {
            if (!active[g.index(i, j)] || !active[g.index(i - 1, j)] || !active[g.index(i + 1, j)] ||
                !active[g.index(i, j - 1)] || !active[g.index(i, j + 1)])
                continue;
            Vec2 dx = (disp.at(i + 1, j) - disp.at(i - 1, j)) / (2.0 * g.h);
            Vec2 dy = (disp.at(i, j + 1) - disp.at(i, j - 1)) / (2.0 * g.h);
            double det = (1.0 + dx.x1) * (1.0 + dy.x2) - dx.x2 * dy.x1;
            worst = std::max(worst, std::abs(det - 1.0));
        }
    return worst;
}

FlowDiagnostics flow_diagnostics(const SimState& state, double fitted_C, std::size_t pair_budget) {
    FlowDiagnostics d;
    std::vector<Vec2> s(state.grid.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        if (state.active[k]) s[k] = state.velocity.at_node(k);
    d.ll_norm = ll_norm(s, state.grid, &state.active, pair_budget).total();
    d.holder_beta = std::exp(-fitted_C * state.max_norm * state.t);
    d.area_distortion = area_distortion(state.vorticity.disp, state.active);
    return d;
}

}  // namespace serfati
