#include "serfati/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "serfati/convolution.hpp"
#include "serfati/errors.hpp"
#include "serfati/parallel.hpp"
#include "serfati/transport.hpp"

namespace serfati {

namespace {

using json = nlohmann::json;

struct NearEntry {
    std::uint32_t col;
    double w1, w2;
};

struct BndEntry {
    std::uint32_t k;
    double g;
};

struct SymPair {
    SymWeight w1, w2;
};

Vec2 contract_pair(const SymPair& s, double q11, double q22, double q12) {
    return {s.w1.s11 * q11 + s.w1.s22 * q22 + s.w1.s12 * q12,
            s.w2.s11 * q11 + s.w2.s22 * q22 + s.w2.s12 * q12};
}

SymPair sym_weights(const Domain& d, const Cutoff& c, double eps, Vec2 x, Vec2 y, KernelKind kind) {
    auto w = farfield_weights(d, c, eps, x, y, kind);
    return {symmetrize(w[0]), symmetrize(w[1])};
}

}  // namespace

RunConfig resolved(const RunConfig& config, const Scenario& scenario) {
    RunConfig c = config;
    if (c.half_width == 0.0) c.half_width = scenario.default_half_width;
    if (c.eps == 0.0) c.eps = scenario.default_eps;
    if (c.quad.truncation_radius == 0.0)
        c.quad.truncation_radius = scenario.default_truncation_radius > 0.0
                                       ? scenario.default_truncation_radius
                                       : 50.0 * c.eps;
    return c;
}

struct Solver::Impl {
    Scenario sc;
    RunConfig cfg;
    SimState st;
    KernelKind kind;

    std::size_t n_act = 0, n_bnd = 0, n_probe = 0;
    std::vector<std::size_t> act_idx;
    std::vector<int> layer;  // 0 fluid, 1..3 ghost, 4 deep inside the obstacle
    std::vector<Vec2> px, u0p, F0, far_acc, bnd_acc, far_rate, bnd_rate, up;
    std::vector<double> tail0;
    std::vector<double> omega0_node;

    std::unique_ptr<ToeplitzConvolver> conv;
    int k_near[2] = {-1, -1};
    int k_far[2][3] = {{-1, -1, -1}, {-1, -1, -1}};

    std::vector<std::vector<NearEntry>> near_rows;
    std::vector<float> far_dense;
    bool dense = false;
    std::vector<std::vector<BndEntry>> bnd_rows;
    std::vector<Vec2> kbar_half;

    std::vector<ResidualAccumulator> res_acc;
    std::vector<std::size_t> res_node;
    std::vector<double> last_D;
    std::vector<Vec2> last_near;

    mutable bool far_quad_done = false;
    mutable double far_quad_rate = 0.0;

    Impl(const Scenario& s, const RunConfig& c) : sc(s), cfg(resolved(c, s)) { setup(); }

    bool plane() const { return !st.domain.has_boundary(); }

    void setup();
    void build_masks();
    void build_near();
    void build_far();
    void build_boundary();
    void build_f0();

    void extrapolate(GridField<Vec2>& f) const;
    std::vector<Vec2> near_values(const std::vector<double>& D) const;
    std::vector<Vec2> far_dev(const std::vector<Vec2>& u) const;
    std::vector<Vec2> far_values(const std::vector<Vec2>& u) const;
    std::vector<Vec2> bnd_values(const std::vector<Vec2>& u) const;
    void sync_fields();
    void step();
    SerfatiNorm current_norm() const;
};

void Solver::Impl::setup() {
    if (!(cfg.h > 0.0) || !(cfg.dt > 0.0) || !(cfg.eps > 0.0) || !(cfg.half_width > 0.0))
        throw ConfigError("h, dt, eps and the window half-width must be positive");
    if (!(cfg.t_final >= 0.0)) throw ConfigError("t_final must be non-negative");
    double nsteps = cfg.t_final / cfg.dt;
    if (std::abs(nsteps - std::round(nsteps)) > 1e-9 * std::max(1.0, nsteps))
        throw ConfigError("t_final must be a multiple of dt");
    if (cfg.boundary_probes < 4) throw ConfigError("at least 4 boundary probes are needed");
    if (!(cfg.penetration_cap >= 0.0)) throw ConfigError("penetration cap must be non-negative");

    st.domain = sc.domain;
    st.cutoff = Cutoff::standard();
    st.eps = cfg.eps;
    st.dt = cfg.dt;
    st.quad = cfg.quad;
    st.grid = Grid::square(cfg.half_width, cfg.h);
    if (!(cfg.quad.truncation_radius > st.cutoff.c_outer() * st.eps))
        throw ConfigError("truncation radius must exceed the cutoff support");
    kind = identity_kernel(st.domain);
    build_masks();

    const Grid& g = st.grid;
    st.velocity = VelocityField(sc.u0, g);
    st.previous = st.velocity;
    st.vorticity = VorticityField(sc.omega0, g);
    st.far_accum = GridField<Vec2>(g);
    st.boundary_accum = GridField<Vec2>(g);
    st.omega_sup = sc.omega_sup;

    for (std::size_t k = 0; k < g.size(); ++k)
        if (st.active[k]) act_idx.push_back(k);
    n_act = act_idx.size();
    if (n_act == 0) throw ConfigError("the window contains no fluid nodes");
    if (!plane()) st.boundary = boundary_sample(st.domain, cfg.boundary_probes);
    n_bnd = st.boundary.size();
    n_probe = n_act + n_bnd;
    px.resize(n_probe);
    for (std::size_t p = 0; p < n_act; ++p) px[p] = g.node(act_idx[p]);
    for (std::size_t b = 0; b < n_bnd; ++b) px[n_act + b] = st.boundary[b].y;
    u0p.resize(n_probe);
    parallel_for(n_probe, [&](std::size_t p) { u0p[p] = sc.u0(px[p]); });
    omega0_node.assign(g.size(), 0.0);
    for (std::size_t k : act_idx) {
        omega0_node[k] = sc.omega0(g.node(k));
        if (std::abs(omega0_node[k]) > st.omega_sup)
            throw ConfigError("scenario omega_sup is below sup |omega0| on the grid");
    }

    build_near();
    build_far();
    build_boundary();
    build_f0();

    up = u0p;
    far_acc.assign(n_probe, {});
    bnd_acc.assign(n_probe, {});
    far_rate = F0;
    bnd_rate = bnd_values(up);
    last_D.assign(g.size(), 0.0);
    last_near.assign(n_probe, {});
    st.boundary_velocity.assign(u0p.begin() + static_cast<long>(n_act), u0p.end());
    st.boundary_far_accum.assign(n_bnd, {});
    st.boundary_bnd_accum.assign(n_bnd, {});

    std::vector<Vec2> s(g.size());
    for (std::size_t p = 0; p < n_act; ++p) s[act_idx[p]] = u0p[p];
    st.u0_norm = serfati_norm(s, g, Window::all(g), &st.active);
    st.envelope_C = cfg.apriori_factor * st.u0_norm.total();
    st.max_norm = st.u0_norm.total();

    int stride = std::max(1, cfg.tracer_stride);
    for (int j = 0; j < g.ny; j += stride)
        for (int i = 0; i < g.nx; i += stride) {
            std::size_t k = g.index(i, j);
            if (!st.active[k]) continue;
            st.tracer_start.push_back(g.node(k));
        }
    st.tracer_pos = st.tracer_start;
    for (Vec2 x : st.tracer_pos) st.tracer_vel.push_back(sc.u0(x));

    std::vector<Vec2> probes = cfg.residual_probes;
    if (probes.empty()) {
        double w = cfg.half_width;
        probes = {{0.3 * w, 0.1 * w}, {-0.45 * w, 0.35 * w}, {0.15 * w, -0.6 * w}, {0.7 * w, 0.55 * w}};
    }
    for (Vec2 q : probes) {
        std::size_t best = act_idx[0];
        double bd = norm2(g.node(best) - q);
        for (std::size_t k : act_idx) {
            double d = norm2(g.node(k) - q);
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        res_node.push_back(best);
        res_acc.emplace_back(st.domain, st.cutoff, st.eps, g.node(best), st.quad, cfg.boundary_probes);
    }
    const VelocityField& vf = st.velocity;
    for (auto& r : res_acc) r.add([&vf](Vec2 x) { return vf.at(x); }, 0.0);
}

void Solver::Impl::build_masks() {
    const Grid& g = st.grid;
    st.active.assign(g.size(), 0);
    layer.assign(g.size(), 4);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (st.domain.contains(g.node(k))) {
            st.active[k] = 1;
            layer[k] = 0;
        }
    for (int L = 1; L <= 3; ++L)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                std::size_t k = g.index(i, j);
                if (layer[k] < L) continue;
                bool near = false;
                for (int b = -1; b <= 1 && !near; ++b)
                    for (int a = -1; a <= 1; ++a) {
                        int ii = i + a, jj = j + b;
                        if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) continue;
                        if (layer[g.index(ii, jj)] == L - 1) {
                            near = true;
                            break;
                        }
                    }
                if (near) layer[k] = L;
            }
    st.traced.assign(g.size(), 0);
    // obstacle nodes are traced too: a frozen displacement there leaks into the ghost layers
    st.traced.assign(g.size(), 1);
}

void Solver::Impl::extrapolate(GridField<Vec2>& f) const {
    const Grid& g = f.grid;
    for (int L = 1; L <= 3; ++L)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                std::size_t k = g.index(i, j);
                if (layer[k] != L) continue;
                Vec2 acc;
                int n = 0;
                for (int b = -1; b <= 1; ++b)
                    for (int a = -1; a <= 1; ++a) {
                        int ii = i + a, jj = j + b;
                        if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) continue;
                        std::size_t m = g.index(ii, jj);
                        if (layer[m] < L) {
                            acc += f.data[m];
                            ++n;
                        }
                    }
                f.data[k] = n ? acc / n : Vec2{};
            }
    for (std::size_t k = 0; k < g.size(); ++k)
        if (layer[k] > 3) f.data[k] = {};
}

void Solver::Impl::build_near() {
    const Grid& g = st.grid;
    const double h2 = g.h * g.h;
    const double reach = st.cutoff.c_outer() * st.eps;
    if (plane()) {
        conv = std::make_unique<ToeplitzConvolver>(g.nx, g.ny);
        for (int c = 0; c < 2; ++c)
            k_near[c] = conv->add_kernel([&, c](int di, int dj) {
                if (di == 0 && dj == 0) return 0.0;
                Vec2 z{di * g.h, dj * g.h};
                double a = cutoff_eval(st.cutoff, st.eps, z);
                return a == 0.0 ? 0.0 : h2 * a * k_free(z)[c];
            });
        return;
    }
    std::vector<int> col_of(g.size(), -1);
    for (std::size_t p = 0; p < n_act; ++p) col_of[act_idx[p]] = static_cast<int>(p);
    near_rows.resize(n_probe);
    int span = static_cast<int>(std::ceil(reach / g.h)) + 1;
    parallel_for(n_probe, [&](std::size_t p) {
        Vec2 x = px[p];
        int ic = static_cast<int>(std::lround((x.x1 - g.origin.x1) / g.h));
        int jc = static_cast<int>(std::lround((x.x2 - g.origin.x2) / g.h));
        auto& row = near_rows[p];
        for (int j = std::max(0, jc - span); j <= std::min(g.ny - 1, jc + span); ++j)
            for (int i = std::max(0, ic - span); i <= std::min(g.nx - 1, ic + span); ++i) {
                int c = col_of[g.index(i, j)];
                if (c < 0) continue;
                Vec2 y = g.node(i, j);
                if (norm2(x - y) < 1e-24) continue;
                double a = cutoff_eval(st.cutoff, st.eps, x - y);
                if (a == 0.0) continue;
                Vec2 k = kernel_value(st.domain, kind, x, y);
                row.push_back({static_cast<std::uint32_t>(c), h2 * a * k.x1, h2 * a * k.x2});
            }
    });
}

void Solver::Impl::build_far() {
    const Grid& g = st.grid;
    const double h2 = g.h * g.h;
    if (plane()) {
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 3; ++c)
                k_far[j][c] = conv->add_kernel([&, j, c](int di, int dj) {
                    Vec2 z{di * g.h, dj * g.h};
                    if (norm(z) <= st.cutoff.c_inner() * st.eps) return 0.0;
                    SymPair s = sym_weights(st.domain, st.cutoff, st.eps, z, {0.0, 0.0}, kind);
                    const SymWeight& w = j == 0 ? s.w1 : s.w2;
                    return h2 * (c == 0 ? w.s11 : c == 1 ? w.s22 : w.s12);
                });
        return;
    }
    double mb = static_cast<double>(n_probe) * n_act * 6.0 * sizeof(float) / (1024.0 * 1024.0);
    dense = mb <= cfg.dense_cache_mb;
    if (!dense) return;
    far_dense.assign(n_probe * n_act * 6, 0.0f);
    const double inner = st.cutoff.c_inner() * st.eps;
    parallel_for(n_probe, [&](std::size_t p) {
        float* row = &far_dense[p * n_act * 6];
        for (std::size_t c = 0; c < n_act; ++c) {
            Vec2 y = g.node(act_idx[c]);
            if (norm(px[p] - y) <= inner) continue;
            SymPair s = sym_weights(st.domain, st.cutoff, st.eps, px[p], y, kind);
            float* e = row + 6 * c;
            e[0] = static_cast<float>(h2 * s.w1.s11);
            e[1] = static_cast<float>(h2 * s.w1.s22);
            e[2] = static_cast<float>(h2 * s.w1.s12);
            e[3] = static_cast<float>(h2 * s.w2.s11);
            e[4] = static_cast<float>(h2 * s.w2.s22);
            e[5] = static_cast<float>(h2 * s.w2.s12);
        }
    });
}

void Solver::Impl::build_boundary() {
    if (plane()) return;
    bnd_rows.resize(n_probe);
    kbar_half.resize(n_probe);
    double ds = st.domain.boundary_length() / static_cast<double>(n_bnd);
    parallel_for(n_probe, [&](std::size_t p) {
        kbar_half[p] = 0.5 * kbar(st.domain, px[p]);
        for (std::size_t b = 0; b < n_bnd; ++b) {
            Vec2 gr = cutoff_grad(st.cutoff, st.eps, px[p] - st.boundary[b].y);
            double v = dot(gr, st.boundary[b].tau);
            if (v != 0.0) bnd_rows[p].push_back({static_cast<std::uint32_t>(b), v * ds});
        }
    });
}

void Solver::Impl::build_f0() {
    F0.assign(n_probe, {});
    tail0.assign(n_probe, 0.0);
    const auto& u0 = sc.u0;
    if (plane()) {
        FarStencil s0 = far_stencil(st.domain, st.cutoff, st.eps, {0.0, 0.0}, st.quad, kind);
        parallel_for(n_probe, [&](std::size_t p) {
            Vec2 x = px[p];
            FarIncrement r = apply_far_stencil(s0, [&](Vec2 y) { return u0(x + y); }, st.quad.tail_constant);
            F0[p] = r.value;
            tail0[p] = r.tail_estimate;
        });
        return;
    }
    parallel_for(n_probe, [&](std::size_t p) {
        FarStencil s = far_stencil(st.domain, st.cutoff, st.eps, px[p], st.quad, kind);
        FarIncrement r = apply_far_stencil(s, u0, st.quad.tail_constant);
        F0[p] = r.value;
        tail0[p] = r.tail_estimate;
    });
}

std::vector<Vec2> Solver::Impl::near_values(const std::vector<double>& D) const {
    std::vector<Vec2> out(n_probe);
    if (plane()) {
        auto spec = conv->transform(D);
        std::vector<double> n1, n2;
        for (int c = 0; c < 2; ++c) {
            auto acc = conv->zero_spectrum();
            conv->accumulate(acc, k_near[c], spec);
            conv->inverse(acc, c == 0 ? n1 : n2);
        }
        for (std::size_t p = 0; p < n_act; ++p) out[p] = {n1[act_idx[p]], n2[act_idx[p]]};
        return out;
    }
    parallel_for(n_probe, [&](std::size_t p) {
        Vec2 acc;
        for (const auto& e : near_rows[p]) {
            double d = D[act_idx[e.col]];
            acc.x1 += e.w1 * d;
            acc.x2 += e.w2 * d;
        }
        out[p] = acc;
    });
    return out;
}

std::vector<Vec2> Solver::Impl::far_dev(const std::vector<Vec2>& u) const {
    std::vector<Vec2> out(n_probe);
    std::vector<double> q11(n_act), q22(n_act), q12(n_act);
    bool any = false;
    for (std::size_t c = 0; c < n_act; ++c) {
        Vec2 a = u[c], b = u0p[c];
        q11[c] = a.x1 * a.x1 - b.x1 * b.x1;
        q22[c] = a.x2 * a.x2 - b.x2 * b.x2;
        q12[c] = a.x1 * a.x2 - b.x1 * b.x2;
        any = any || q11[c] != 0.0 || q22[c] != 0.0 || q12[c] != 0.0;
    }
    if (!any) return out;
    const Grid& g = st.grid;
    if (plane()) {
        std::vector<double> grid_q(g.size(), 0.0);
        std::vector<ToeplitzConvolver::Spectrum> spec;
        for (const auto* q : {&q11, &q22, &q12}) {
            for (std::size_t c = 0; c < n_act; ++c) grid_q[act_idx[c]] = (*q)[c];
            spec.push_back(conv->transform(grid_q));
        }
        std::vector<double> f[2];
        for (int j = 0; j < 2; ++j) {
            auto acc = conv->zero_spectrum();
            for (int c = 0; c < 3; ++c) conv->accumulate(acc, k_far[j][c], spec[c]);
            conv->inverse(acc, f[j]);
        }
        for (std::size_t p = 0; p < n_act; ++p) out[p] = {f[0][act_idx[p]], f[1][act_idx[p]]};
        return out;
    }
    const double h2 = g.h * g.h;
    const double inner = st.cutoff.c_inner() * st.eps;
    parallel_for(n_probe, [&](std::size_t p) {
        double a1 = 0.0, a2 = 0.0;
        if (dense) {
            const float* row = &far_dense[p * n_act * 6];
            for (std::size_t c = 0; c < n_act; ++c) {
                const float* e = row + 6 * c;
                a1 += e[0] * q11[c] + e[1] * q22[c] + e[2] * q12[c];
                a2 += e[3] * q11[c] + e[4] * q22[c] + e[5] * q12[c];
            }
        } else {
            for (std::size_t c = 0; c < n_act; ++c) {
                if (q11[c] == 0.0 && q22[c] == 0.0 && q12[c] == 0.0) continue;
                Vec2 y = g.node(act_idx[c]);
                if (norm(px[p] - y) <= inner) continue;
                Vec2 v = contract_pair(sym_weights(st.domain, st.cutoff, st.eps, px[p], y, kind),
                                       q11[c], q22[c], q12[c]);
                a1 += h2 * v.x1;
                a2 += h2 * v.x2;
            }
        }
        out[p] = {a1, a2};
    });
    return out;
}

std::vector<Vec2> Solver::Impl::far_values(const std::vector<Vec2>& u) const {
    std::vector<Vec2> out = far_dev(u);
    for (std::size_t p = 0; p < n_probe; ++p) out[p] += F0[p];
    return out;
}

std::vector<Vec2> Solver::Impl::bnd_values(const std::vector<Vec2>& u) const {
    std::vector<Vec2> out(n_probe);
    if (plane()) return out;
    std::vector<double> s(n_bnd);
    for (std::size_t b = 0; b < n_bnd; ++b) s[b] = norm2(u[n_act + b]);
    for (std::size_t p = 0; p < n_probe; ++p) {
        double acc = 0.0;
        for (const auto& e : bnd_rows[p]) acc += e.g * s[e.k];
        out[p] = acc * kbar_half[p];
    }
    return out;
}

SerfatiNorm Solver::Impl::current_norm() const {
    std::vector<Vec2> s(st.grid.size());
    for (std::size_t p = 0; p < n_act; ++p) s[act_idx[p]] = up[p];
    return serfati_norm(s, st.grid, Window::all(st.grid), &st.active);
}

void Solver::Impl::sync_fields() {
    GridField<Vec2>& dev = st.velocity.dev;
    std::fill(dev.data.begin(), dev.data.end(), Vec2{});
    std::fill(st.far_accum.data.begin(), st.far_accum.data.end(), Vec2{});
    std::fill(st.boundary_accum.data.begin(), st.boundary_accum.data.end(), Vec2{});
    for (std::size_t p = 0; p < n_act; ++p) {
        dev.data[act_idx[p]] = up[p] - u0p[p];
        st.far_accum.data[act_idx[p]] = far_acc[p];
        st.boundary_accum.data[act_idx[p]] = bnd_acc[p];
    }
    if (!plane()) {
        extrapolate(dev);
        extrapolate(st.far_accum);
        extrapolate(st.boundary_accum);
    }
    for (std::size_t b = 0; b < n_bnd; ++b) {
        st.boundary_velocity[b] = up[n_act + b];
        st.boundary_far_accum[b] = far_acc[n_act + b];
        st.boundary_bnd_accum[b] = bnd_acc[n_act + b];
    }
}

void Solver::Impl::step() {
    const double dt = st.dt;
    const Grid& g = st.grid;
    const auto& u0 = sc.u0;

    // velocity over the step: linear in time between u^n and the extrapolated u^{n+1}
    GridField<Vec2> dev_n = st.velocity.dev;
    GridField<Vec2> dev_g = dev_n;
    for (std::size_t k = 0; k < g.size(); ++k) dev_g.data[k] = 2.0 * dev_n.data[k] - st.previous.dev.data[k];
    StepVelocity guess = [&](Vec2 x, double th) {
        if (!g.inside(x)) return u0(x);
        return u0(x) + (1.0 - th) * dev_n.interpolate(x) + th * dev_g.interpolate(x);
    };
    LabelUpdate lu = advance_labels(st.domain, st.vorticity.disp, st.traced, st.active, guess, dt);
    st.penetrations += lu.penetrations;
    if (lu.penetrations > cfg.penetration_cap * static_cast<double>(n_act)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d of %zu fluid nodes traced into the obstacle at t = %.6g",
                      lu.penetrations, n_act, st.t + dt);
        throw GuardrailError(buf);
    }
    st.vorticity.disp = std::move(lu.disp);

    std::vector<double> D(g.size(), 0.0);
    for (std::size_t k : act_idx) {
        double w = st.vorticity.at_node(k);
        if (!(std::abs(w) <= st.omega_sup)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "node vorticity %.17g exceeds sup |omega0| = %.17g", w,
                          st.omega_sup);
            throw GuardrailError(buf);
        }
        D[k] = w - omega0_node[k];
    }
    std::vector<Vec2> near = near_values(D);

    std::vector<Vec2> pred(n_probe);
    for (std::size_t p = 0; p < n_probe; ++p)
        pred[p] = u0p[p] + near[p] - (far_acc[p] + dt * far_rate[p]) - (bnd_acc[p] + dt * bnd_rate[p]);
    std::vector<Vec2> Fs = far_values(pred);
    std::vector<Vec2> Bs = bnd_values(pred);
    for (std::size_t p = 0; p < n_probe; ++p) {
        far_acc[p] += (0.5 * dt) * (far_rate[p] + Fs[p]);
        bnd_acc[p] += (0.5 * dt) * (bnd_rate[p] + Bs[p]);
        up[p] = u0p[p] + near[p] - far_acc[p] - bnd_acc[p];
    }
    far_rate = far_values(up);
    bnd_rate = bnd_values(up);
    last_D = std::move(D);
    last_near = std::move(near);

    st.previous = st.velocity;
    sync_fields();
    ++st.steps;
    st.t = static_cast<double>(st.steps) * dt;

    double usup = 0.0;
    for (std::size_t p = 0; p < n_act; ++p) usup = std::max(usup, norm(up[p]));
    double bound = st.envelope_C > 0.0 ? apriori_velocity_bound(st.u0_norm, st.t, st.envelope_C) : 0.0;
    if (!(usup <= bound)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "sup |u| = %.6g exceeds the envelope %.6g at t = %.6g", usup,
                      bound, st.t);
        throw GuardrailError(buf);
    }
    st.max_norm = std::max(st.max_norm, current_norm().total());

    const GridField<Vec2>& d0 = st.previous.dev;
    const GridField<Vec2>& d1 = st.velocity.dev;
    StepVelocity exact = [&](Vec2 x, double th) {
        if (!g.inside(x)) return u0(x);
        return u0(x) + (1.0 - th) * d0.interpolate(x) + th * d1.interpolate(x);
    };
    parallel_for(st.tracer_pos.size(), [&](std::size_t i) {
        st.tracer_pos[i] = trace_forward(st.tracer_pos[i], dt, exact);
        st.tracer_vel[i] = st.velocity.at(st.tracer_pos[i]);
    });

    const VelocityField& vf = st.velocity;
    for (auto& r : res_acc) r.add([&vf](Vec2 x) { return vf.at(x); }, dt);
}

Solver::Solver(const Scenario& scenario, const RunConfig& config)
    : impl_(std::make_unique<Impl>(scenario, config)) {}

Solver::~Solver() = default;

void Solver::step() { impl_->step(); }

void Solver::advance_to(double time) {
    long target = std::lround(time / impl_->st.dt);
    while (impl_->st.steps < target) impl_->step();
}

const SimState& Solver::state() const { return impl_->st; }
const Scenario& Solver::scenario() const { return impl_->sc; }
const RunConfig& Solver::config() const { return impl_->cfg; }

std::vector<Vec2> Solver::node_velocity() const {
    std::vector<Vec2> out(impl_->st.grid.size());
    for (std::size_t p = 0; p < impl_->n_act; ++p) out[impl_->act_idx[p]] = impl_->up[p];
    return out;
}

Budget Solver::budget() const {
    const Impl& m = *impl_;
    const SimState& st = m.st;
    const Grid& g = st.grid;
    Budget b;
    double t = st.t;
    for (std::size_t p = 0; p < m.n_probe; ++p) b.tail = std::max(b.tail, m.tail0[p] * t);

    // sample fluid nodes with even indices, so that they belong to the 2h subgrid
    std::vector<std::size_t> samples;
    std::size_t stride = std::max<std::size_t>(1, m.n_act / 24);
    for (std::size_t p = 0; p < m.n_act; p += stride) {
        std::size_t k = m.act_idx[p];
        int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
        if (i % 2 == 0 && j % 2 == 0) samples.push_back(p);
        else if (i + 1 < g.nx && j + 1 < g.ny) {
            int ii = i + (i % 2), jj = j + (j % 2);
            std::size_t kk = g.index(ii, jj);
            if (st.active[kk])
                for (std::size_t q = 0; q < m.n_act; ++q)
                    if (m.act_idx[q] == kk) {
                        samples.push_back(q);
                        break;
                    }
        }
    }

    if (!m.far_quad_done) {
        QuadratureSpec fine = st.quad;
        fine.radial_nodes *= 2;
        fine.angular_nodes *= 2;
        std::vector<double> diff(samples.size(), 0.0);
        parallel_for(samples.size(), [&](std::size_t s) {
            std::size_t p = samples[s];
            FarStencil fs = far_stencil(st.domain, st.cutoff, st.eps, m.px[p], fine, m.kind);
            FarIncrement r = apply_far_stencil(fs, m.sc.u0, fine.tail_constant);
            diff[s] = norm(r.value - m.F0[p]);
        });
        m.far_quad_rate = 0.0;
        for (double d : diff) m.far_quad_rate = std::max(m.far_quad_rate, d);
        m.far_quad_done = true;
    }
    b.far_quad = m.far_quad_rate * t;

    const double h2 = g.h * g.h;
    const double inner = st.cutoff.c_inner() * st.eps;
    std::vector<double> near_err(samples.size(), 0.0), far_err(samples.size(), 0.0);
    parallel_for(samples.size(), [&](std::size_t s) {
        Vec2 x = m.px[samples[s]];
        Vec2 nh, n2h, fh, f2h;
        for (std::size_t c = 0; c < m.n_act; ++c) {
            std::size_t k = m.act_idx[c];
            int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
            bool coarse = i % 2 == 0 && j % 2 == 0;
            Vec2 y = g.node(k);
            double r = norm(x - y);
            if (r == 0.0) continue;
            double d = m.last_D[k];
            if (d != 0.0 && r < st.cutoff.c_outer() * st.eps) {
                Vec2 v = (h2 * d * cutoff_eval(st.cutoff, st.eps, x - y)) * kernel_value(st.domain, m.kind, x, y);
                nh += v;
                if (coarse) n2h += 4.0 * v;
            }
            Vec2 a = m.up[c], u0v = m.u0p[c];
            double q11 = a.x1 * a.x1 - u0v.x1 * u0v.x1, q22 = a.x2 * a.x2 - u0v.x2 * u0v.x2,
                   q12 = a.x1 * a.x2 - u0v.x1 * u0v.x2;
            if ((q11 != 0.0 || q22 != 0.0 || q12 != 0.0) && r > inner) {
                Vec2 v = h2 * contract_pair(sym_weights(st.domain, st.cutoff, st.eps, x, y, m.kind), q11, q22, q12);
                fh += v;
                if (coarse) f2h += 4.0 * v;
            }
        }
        bool cut = st.domain.has_boundary() && st.domain.boundary_distance(x) < st.cutoff.c_outer() * st.eps;
        near_err[s] = norm(nh - n2h) / (m.sc.discontinuous_vorticity || cut ? 1.0 : 3.0);
        far_err[s] = norm(fh - f2h) / (st.domain.has_boundary() ? 1.0 : 3.0);
    });
    for (std::size_t s = 0; s < samples.size(); ++s) {
        b.near_grid = std::max(b.near_grid, near_err[s]);
        b.far_grid = std::max(b.far_grid, far_err[s] * t);
    }
    return b;
}

std::vector<ProbeRecord> Solver::probe_records() const {
    const Impl& m = *impl_;
    const SimState& st = m.st;
    std::vector<ProbeRecord> out;
    const VelocityField& vf = st.velocity;
    const VorticityField& wf = st.vorticity;
    for (std::size_t i = 0; i < m.res_acc.size(); ++i) {
        ResidualResult r = m.res_acc[i].residual([&vf](Vec2 x) { return vf.at(x); },
                                                 [&wf](Vec2 x) { return wf.at(x); }, m.sc.omega0,
                                                 m.sc.u0, m.cfg.near);
        ProbeRecord rec;
        rec.t = st.t;
        rec.x = m.res_acc[i].point();
        rec.near = r.near;
        rec.far_accum = r.far_accum;
        rec.boundary_accum = r.boundary_accum;
        rec.tail_estimate = r.tail_estimate;
        rec.u_solver = vf.at_node(m.res_node[i]);
        rec.u_reconstructed = m.sc.u0(rec.x) + r.near - r.far_accum - r.boundary_accum;
        rec.residual = r.residual;
        out.push_back(rec);
    }
    return out;
}

ConservationRow conservation_report(const SimState& state) {
    ConservationRow row;
    row.t = state.t;
    const Grid& g = state.grid;
    if (!state.boundary.empty()) {
        double ds = state.domain.boundary_length() / static_cast<double>(state.boundary.size());
        for (std::size_t b = 0; b < state.boundary.size(); ++b)
            row.circulation += dot(state.boundary_velocity[b], state.boundary[b].tau) * ds;
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!state.active[k]) continue;
        double w = state.vorticity.at_node(k);
        row.vorticity_mass += w * g.h * g.h;
        row.omega_sup = std::max(row.omega_sup, std::abs(w));
        row.u_sup = std::max(row.u_sup, norm(state.velocity.at_node(k)));
    }
    row.area_distortion = area_distortion(state.vorticity.disp, state.active);
    return row;
}

SerfatiTerms reconstruct_velocity(const SimState& state, Vec2 x) {
    SerfatiTerms terms;
    const VorticityField& wf = state.vorticity;
    terms.near = near_field_term(state.domain, state.cutoff, state.eps, x,
                                 [&wf](Vec2 y) { return wf.at(y); }, wf.omega0,
                                 identity_kernel(state.domain));
    if (state.grid.inside(x)) {
        terms.far_accum = state.far_accum.interpolate(x);
        terms.boundary_accum = state.boundary_accum.interpolate(x);
    }
    terms.reconstructed = state.velocity.u0(x) + terms.near - terms.far_accum - terms.boundary_accum;
    return terms;
}

namespace {

json vec_json(Vec2 v) { return json::array({v.x1, v.x2}); }

json config_json(const RunConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["s0"] = c.s0;
    j["h"] = c.h;
    j["half_width"] = c.half_width;
    j["dt"] = c.dt;
    j["t_final"] = c.t_final;
    j["epsilon"] = c.eps;
    j["truncation_radius"] = c.quad.truncation_radius;
    j["quad_radial_nodes"] = c.quad.radial_nodes;
    j["quad_angular_nodes"] = c.quad.angular_nodes;
    j["boundary_probes"] = c.boundary_probes;
    j["tracer_stride"] = c.tracer_stride;
    j["snapshot_interval"] = c.snapshot_interval;
    j["apriori_factor"] = c.apriori_factor;
    j["fitted_C"] = c.fitted_C;
    j["penetration_cap"] = c.penetration_cap;
    j["quad_panel_ratio"] = c.quad.panel_ratio;
    j["quad_target_tol"] = c.quad.target_tol;
    j["near_radial_nodes"] = c.near.radial_nodes;
    j["near_angular_nodes"] = c.near.angular_nodes;
    j["dense_cache_mb"] = c.dense_cache_mb;
    j["compute_budget"] = c.compute_budget;
    json probes = json::array();
    for (Vec2 x : c.residual_probes) probes.push_back(vec_json(x));
    j["residual_probes"] = probes;
    return j;
}

json probe_json(const ProbeRecord& r) {
    json j;
    j["t"] = r.t;
    j["x"] = vec_json(r.x);
    j["near"] = vec_json(r.near);
    j["far_accum"] = vec_json(r.far_accum);
    j["boundary_accum"] = vec_json(r.boundary_accum);
    j["tail_estimate"] = r.tail_estimate;
    j["u_reconstructed"] = vec_json(r.u_reconstructed);
    j["u_solver"] = vec_json(r.u_solver);
    j["residual"] = vec_json(r.residual);
    return j;
}

std::string gnuplot_script(const std::string& csv, double t) {
    std::string png = csv.substr(0, csv.size() - 4) + ".png";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    return "set datafile separator ','\n"
           "set terminal pngcairo size 900,800\n"
           "set output '" + png + "'\n"
           "set size ratio -1\n"
           "set title 'vorticity, t = " + std::string(buf) + "'\n"
           "plot '" + csv + "' every ::1 using 1:2:5 with points pt 5 ps 0.4 palette notitle\n";
}

}  // namespace

std::string probes_ndjson(const std::vector<ProbeRecord>& probes) {
    std::string s;
    for (const auto& r : probes) s += probe_json(r).dump() + "\n";
    return s;
}

std::string run_config_json(const RunConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string report_json(const RunReport& r) {
    json j;
    j["config"] = config_json(r.config);
    j["status"] = r.status;
    j["message"] = r.message;
    j["t_reached"] = r.t_reached;
    j["steps"] = r.steps;
    j["runtime_s"] = r.runtime_s;
    j["epsilon"] = r.eps;
    j["half_width"] = r.half_width;
    j["envelope_C"] = r.envelope_C;
    j["penetrations"] = r.penetrations;
    json table = json::array();
    for (const auto& row : r.table)
        table.push_back({{"t", row.t},
                         {"circulation", row.circulation},
                         {"vorticity_mass", row.vorticity_mass},
                         {"omega_sup", row.omega_sup},
                         {"u_sup", row.u_sup},
                         {"area_distortion", row.area_distortion}});
    j["conservation"] = table;
    j["budget"] = {{"tail", r.budget.tail},
                   {"far_quadrature", r.budget.far_quad},
                   {"near_grid", r.budget.near_grid},
                   {"far_grid", r.budget.far_grid},
                   {"total", r.budget.total()}};
    j["max_residual"] = r.max_residual;
    j["flow"] = {{"ll_norm", r.flow.ll_norm},
                 {"holder_beta", r.flow.holder_beta},
                 {"area_distortion", r.flow.area_distortion}};
    json probes = json::array();
    for (const auto& p : r.probes) probes.push_back(probe_json(p));
    j["probes"] = probes;
    j["files"] = r.files;
    return j.dump(2) + "\n";
}

RunReport run(const RunConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    Scenario sc = build_scenario(config.scenario, ScenarioParams{config.s0});
    RunReport rep;
    rep.config = resolved(config, sc);
    Solver solver(sc, rep.config);
    const SimState& st = solver.state();
    rep.eps = st.eps;
    rep.half_width = rep.config.half_width;
    rep.envelope_C = st.envelope_C;

    const bool write = !rep.config.out_dir.empty();
    const std::string dir = rep.config.out_dir;
    long nsteps = std::lround(rep.config.t_final / rep.config.dt);
    long snap_every = rep.config.snapshot_interval > 0.0
                          ? std::max(1L, std::lround(rep.config.snapshot_interval / rep.config.dt))
                          : 0;
    long row_every = snap_every > 0 ? snap_every : std::max(1L, nsteps / 4);
    std::string probe_log;
    int snap_id = 0;

    auto snapshot = [&]() {
        if (!write) return;
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%04d.csv", snap_id++);
        std::string csv = dir + "/" + name;
        write_atomic(csv, snapshot_csv(st.velocity, st.vorticity, &st.active));
        std::string gp = csv.substr(0, csv.size() - 4) + ".gp";
        write_atomic(gp, gnuplot_script(name, st.t));
        rep.files.push_back(name);
        rep.files.push_back(gp.substr(dir.size() + 1));
    };
    auto record = [&]() {
        rep.table.push_back(conservation_report(st));
        auto probes = solver.probe_records();
        probe_log += probes_ndjson(probes);
        rep.probes = probes;
    };
    auto finish = [&]() {
        rep.t_reached = st.t;
        rep.steps = st.steps;
        rep.penetrations = st.penetrations;
        rep.flow = flow_diagnostics(st, rep.config.fitted_C);
        if (rep.config.compute_budget) rep.budget = solver.budget();
        rep.max_residual = 0.0;
        for (const auto& p : rep.probes) rep.max_residual = std::max(rep.max_residual, norm(p.residual));
        rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (write) {
            write_atomic(dir + "/probes.ndjson", probe_log);
            rep.files.push_back("probes.ndjson");
            rep.files.push_back("report.json");
            write_atomic(dir + "/report.json", report_json(rep));
        }
    };

    snapshot();
    record();
    try {
        while (st.steps < nsteps) {
            solver.step();
            bool last = st.steps == nsteps;
            if (snap_every > 0 && st.steps % snap_every == 0 && !last) snapshot();
            if ((st.steps % row_every == 0) || last) record();
        }
        if (nsteps > 0) snapshot();
    } catch (const GuardrailError& e) {
        rep.status = "guardrail";
        rep.message = e.what();
        snapshot();
        record();
        finish();
        throw;
    }
    finish();
    return rep;
}

}  // namespace serfati
