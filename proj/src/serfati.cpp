#include "serfati/serfati.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "serfati/errors.hpp"
#include "serfati/solver.hpp"

namespace serfati {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_eps(double eps) {
    if (!(eps > 0.0)) throw ConfigError("cutoff scale eps must be positive");
}

}  // namespace

Vec2 near_field_term(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                     const ScalarFn& omega_t, const ScalarFn& omega_0, KernelKind kind,
                     const NearOptions& opt) {
    check_eps(eps);
    PolarOptions po{opt.radial_nodes, opt.angular_nodes, 1.0, {}};
    Rule rule = polar_rule(domain, x, cutoff.c_outer() * eps, po);
    Vec2 acc;
    for (const auto& q : rule) {
        double d = omega_t(q.y) - omega_0(q.y);
        if (d == 0.0) continue;
        double a = cutoff_eval(cutoff, eps, x - q.y);
        if (a == 0.0) continue;
        acc += (q.w * a * d) * kernel_value(domain, kind, x, q.y);
    }
    return acc;
}

FarStencil far_stencil(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                       const QuadratureSpec& spec, KernelKind kind) {
    check_eps(eps);
    double outer = cutoff.c_outer() * eps;
    if (!(spec.truncation_radius > outer))
        throw ConfigError("truncation radius must exceed the cutoff support");
    FarStencil st;
    st.truncation_radius = spec.truncation_radius;
    st.center = x;
    // the cutoff transition band carries the steep part of the weight
    std::vector<double> breaks;
    const double inner = cutoff.c_inner() * eps;
    for (int k = 1; k <= 4; ++k) breaks.push_back(inner + (outer - inner) * k / 4.0);
    st.rule = annular_rule(domain, x, inner, spec, breaks);
    st.w1.resize(st.rule.size());
    st.w2.resize(st.rule.size());
    for (std::size_t i = 0; i < st.rule.size(); ++i) {
        auto w = farfield_weights(domain, cutoff, eps, x, st.rule[i].y, kind);
        st.w1[i] = symmetrize(w[0]);
        st.w2[i] = symmetrize(w[1]);
    }
    double R = spec.truncation_radius, worst = 0.0;
    for (int k = 0; k < 64; ++k) {
        double th = kTwoPi * (k + 0.5) / 64;
        Vec2 y = x + Vec2{R * std::cos(th), R * std::sin(th)};
        if (!domain.contains(y)) continue;
        auto w = farfield_weights(domain, cutoff, eps, x, y, kind);
        worst = std::max(worst, std::hypot(frobenius(w[0]), frobenius(w[1])));
    }
    st.ring_weight = kTwoPi * R * R * R * worst;
    return st;
}

FarIncrement apply_far_stencil(const FarStencil& st, const VectorFn& u, double tail_constant) {
    FarIncrement out;
    double umax = 0.0;
    for (std::size_t i = 0; i < st.rule.size(); ++i) {
        Vec2 v = u(st.rule[i].y);
        double wq = st.rule[i].w;
        out.value += wq * Vec2{contract(st.w1[i], v), contract(st.w2[i], v)};
    }
    if (tail_constant > 0.0) {
        out.tail_estimate = tail_constant / st.truncation_radius;
    } else {
        // sup |u| over the outer half of the annulus stands in for the tail
        double r2 = 0.25 * st.truncation_radius * st.truncation_radius;
        for (const auto& q : st.rule)
            if (norm2(q.y - st.center) >= r2) umax = std::max(umax, norm(u(q.y)));
        out.tail_estimate = st.ring_weight * umax * umax / st.truncation_radius;
    }
    return out;
}

FarIncrement far_field_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                                 const VectorFn& u, double dt, const QuadratureSpec& spec,
                                 KernelKind kind) {
    FarStencil st = far_stencil(domain, cutoff, eps, x, spec, kind);
    FarIncrement r = apply_far_stencil(st, u, spec.tail_constant);
    r.value = dt * r.value;
    r.tail_estimate *= dt;
    return r;
}

FarIncrement far_field_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                                 const VectorFn& u, double dt, const QuadratureSpec& spec) {
    return far_field_increment(domain, cutoff, eps, x, u, dt, spec, identity_kernel(domain));
}

Vec2 boundary_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                        const std::vector<BoundaryNode>& nodes, const std::vector<Vec2>& ub,
                        double dt) {
    if (!domain.has_boundary()) throw ConfigError("boundary term requested on the full plane");
    check_eps(eps);
    if (nodes.size() != ub.size()) throw ConfigError("boundary samples do not match the nodes");
    if (nodes.empty()) return {};
    double ds = domain.boundary_length() / static_cast<double>(nodes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        Vec2 g = cutoff_grad(cutoff, eps, x - nodes[k].y);
        if (g.x1 == 0.0 && g.x2 == 0.0) continue;
        acc += norm2(ub[k]) * dot(g, nodes[k].tau);
    }
    if (acc == 0.0) return {};
    return (0.5 * dt * acc * ds) * kbar(domain, x);
}

Vec2 boundary_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                        const VectorFn& u, double dt, int nodes) {
    if (!domain.has_boundary()) throw ConfigError("boundary term requested on the full plane");
    auto bn = boundary_sample(domain, nodes);
    std::vector<Vec2> ub(bn.size());
    for (std::size_t k = 0; k < bn.size(); ++k) ub[k] = u(bn[k].y);
    return boundary_increment(domain, cutoff, eps, x, bn, ub, dt);
}

ResidualResult serfati_residual(const Domain& domain, const Cutoff& cutoff, double eps,
                                const Trajectory& traj, Vec2 x, const QuadratureSpec& spec,
                                const NearOptions& near_opt) {
    if (traj.times.empty() || traj.u.size() != traj.times.size() ||
        traj.omega.size() != traj.times.size())
        throw ConfigError("trajectory needs matching times, velocities and vorticities");
    KernelKind kind = identity_kernel(domain);
    FarStencil st = far_stencil(domain, cutoff, eps, x, spec, kind);
    std::vector<BoundaryNode> bn;
    if (domain.has_boundary()) bn = boundary_sample(domain, 512);
    auto bnd_rate = [&](const VectorFn& u) {
        if (bn.empty()) return Vec2{};
        std::vector<Vec2> ub(bn.size());
        for (std::size_t k = 0; k < bn.size(); ++k) ub[k] = u(bn[k].y);
        return boundary_increment(domain, cutoff, eps, x, bn, ub, 1.0);
    };
    ResidualResult res;
    FarIncrement prev = apply_far_stencil(st, traj.u[0], spec.tail_constant);
    Vec2 prev_b = bnd_rate(traj.u[0]);
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
        double dt = traj.times[k] - traj.times[k - 1];
        FarIncrement cur = apply_far_stencil(st, traj.u[k], spec.tail_constant);
        Vec2 cur_b = bnd_rate(traj.u[k]);
        res.far_accum += (0.5 * dt) * (prev.value + cur.value);
        res.boundary_accum += (0.5 * dt) * (prev_b + cur_b);
        res.tail_estimate += 0.5 * dt * (prev.tail_estimate + cur.tail_estimate);
        prev = cur;
        prev_b = cur_b;
    }
    res.near = near_field_term(domain, cutoff, eps, x, traj.omega.back(), traj.omega.front(), kind,
                               near_opt);
    Vec2 rhs = traj.u.front()(x) + res.near - res.far_accum - res.boundary_accum;
    res.residual = traj.u.back()(x) - rhs;
    return res;
}

ResidualAccumulator::ResidualAccumulator(const Domain& domain, const Cutoff& cutoff, double eps,
                                         Vec2 x, const QuadratureSpec& spec, int boundary_nodes)
    : domain_(domain), cutoff_(cutoff), eps_(eps), x_(x), spec_(spec) {
    stencil_ = far_stencil(domain, cutoff, eps, x, spec, identity_kernel(domain));
    if (domain.has_boundary()) bnodes_ = boundary_sample(domain, boundary_nodes);
}

Vec2 ResidualAccumulator::boundary_rate(const VectorFn& u) const {
    if (bnodes_.empty()) return {};
    std::vector<Vec2> ub(bnodes_.size());
    for (std::size_t k = 0; k < bnodes_.size(); ++k) ub[k] = u(bnodes_[k].y);
    return boundary_increment(domain_, cutoff_, eps_, x_, bnodes_, ub, 1.0);
}

void ResidualAccumulator::add(const VectorFn& u, double dt) {
    FarIncrement f = apply_far_stencil(stencil_, u, spec_.tail_constant);
    Vec2 b = boundary_rate(u);
    if (started_) {
        far_acc_ += (0.5 * dt) * (far_rate_ + f.value);
        bnd_acc_ += (0.5 * dt) * (bnd_rate_ + b);
        tail_acc_ += 0.5 * dt * (tail_rate_ + f.tail_estimate);
    }
    started_ = true;
    far_rate_ = f.value;
    bnd_rate_ = b;
    tail_rate_ = f.tail_estimate;
}

ResidualResult ResidualAccumulator::residual(const VectorFn& u_t, const ScalarFn& omega_t,
                                             const ScalarFn& omega_0, const VectorFn& u0,
                                             const NearOptions& near_opt) const {
    ResidualResult r;
    r.far_accum = far_acc_;
    r.boundary_accum = bnd_acc_;
    r.tail_estimate = tail_acc_;
    r.near = near_field_term(domain_, cutoff_, eps_, x_, omega_t, omega_0,
                             identity_kernel(domain_), near_opt);
    r.residual = u_t(x_) - (u0(x_) + r.near - r.far_accum - r.boundary_accum);
    return r;
}

double apriori_velocity_bound(const SerfatiNorm& u0_norm, double t, double fitted_C) {
    if (!(fitted_C > 0.0)) throw ConfigError("fitted constant must be positive");
    if (fitted_C < u0_norm.u_inf) throw ConfigError("fitted constant below sup |u0|");
    return fitted_C * std::exp(fitted_C * t);
}

}  // namespace serfati
