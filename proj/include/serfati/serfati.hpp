#pragma once

#include <vector>

#include "serfati/fields.hpp"
#include "serfati/kernels.hpp"
#include "serfati/quadrature.hpp"

namespace serfati {

struct SimState;

/// Terms of the identity at one point:
/// u(t, x) = u0(x) + near - far_accum - boundary_accum.
struct SerfatiTerms {
    Vec2 near;
    Vec2 far_accum;
    Vec2 boundary_accum;
    double tail_estimate = 0.0;
    Vec2 reconstructed;
};

struct NearOptions {
    int radial_nodes = 32;
    int angular_nodes = 64;
};

/// Integral of a_eps(x - y) V(x, y) (omega_t - omega_0)(y) over the eps-ball in the domain,
/// with V = K_Omega or J_Omega.
Vec2 near_field_term(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                     const ScalarFn& omega_t, const ScalarFn& omega_0, KernelKind kind,
                     const NearOptions& opt = {});

struct FarIncrement {
    Vec2 value;
    double tail_estimate = 0.0;
};

/// dt times the integral of W(x, y) : (u (x) u)(y) over c_inner eps <= |x - y| <= R_T.
/// The tail estimate is dt * tail_constant / R_T; a zero tail_constant is replaced by
/// an estimate sampled on the truncation circle.
FarIncrement far_field_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                                 const VectorFn& u, double dt, const QuadratureSpec& spec,
                                 KernelKind kind);
FarIncrement far_field_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                                 const VectorFn& u, double dt, const QuadratureSpec& spec);

/// Quadrature rule and per-node weights W_j(x, y) used by far_field_increment,
/// precomputed so that repeated time slabs at the same x are cheap.
struct FarStencil {
    Rule rule;
    std::vector<SymWeight> w1, w2;
    double ring_weight = 0.0;  ///< 2 pi R_T^3 max |W| on the truncation circle
    double truncation_radius = 0.0;
    Vec2 center;
};
FarStencil far_stencil(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                       const QuadratureSpec& spec, KernelKind kind);
/// Integral of W : (u (x) u) on a stencil and the matching tail estimate (rate, not times dt).
FarIncrement apply_far_stencil(const FarStencil& st, const VectorFn& u, double tail_constant = 0.0);

/// dt (Kbar(x)/2) times the arc-length integral of |u|^2 grad a_eps(x - y) . tau.
/// This is the accumulated quantity that is subtracted in the identity.
/// Throws ConfigError on the full plane.
Vec2 boundary_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                        const std::vector<BoundaryNode>& nodes, const std::vector<Vec2>& u_on_boundary,
                        double dt);
Vec2 boundary_increment(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                        const VectorFn& u, double dt, int nodes = 512);

/// u0 + near - far_accum - boundary_accum at x from a solver state; the
/// accumulators are interpolated from the probe grid.
SerfatiTerms reconstruct_velocity(const SimState& state, Vec2 x);

/// Velocity and vorticity samples of a trajectory at increasing times.
struct Trajectory {
    std::vector<double> times;
    std::vector<VectorFn> u;
    std::vector<ScalarFn> omega;
};

struct ResidualResult {
    Vec2 residual;
    Vec2 near;
    Vec2 far_accum;
    Vec2 boundary_accum;
    double tail_estimate = 0.0;
};

/// u(t, x) - [u0(x) + near - far - boundary] at the final trajectory time,
/// with trapezoidal time integration over the trajectory samples.
ResidualResult serfati_residual(const Domain& domain, const Cutoff& cutoff, double eps,
                                const Trajectory& traj, Vec2 x, const QuadratureSpec& spec,
                                const NearOptions& near_opt = {});

/// Online form of serfati_residual used during simulations: one probe point,
/// trapezoidal accumulation of the far and boundary terms.
class ResidualAccumulator {
public:
    ResidualAccumulator(const Domain& domain, const Cutoff& cutoff, double eps, Vec2 x,
                        const QuadratureSpec& spec, int boundary_nodes = 512);

    /// Adds the slab between the previous call's field and u over dt (the
    /// first call only records the rate).
    void add(const VectorFn& u, double dt);
    ResidualResult residual(const VectorFn& u_t, const ScalarFn& omega_t, const ScalarFn& omega_0,
                            const VectorFn& u0, const NearOptions& near_opt = {}) const;
    Vec2 point() const { return x_; }

private:
    Domain domain_;
    Cutoff cutoff_;
    double eps_;
    Vec2 x_;
    QuadratureSpec spec_;
    FarStencil stencil_;
    std::vector<BoundaryNode> bnodes_;
    bool started_ = false;
    Vec2 far_rate_, bnd_rate_, far_acc_, bnd_acc_;
    double tail_rate_ = 0.0, tail_acc_ = 0.0;

    Vec2 boundary_rate(const VectorFn& u) const;
};

/// fitted_C exp(fitted_C t): the runtime envelope for sup |u(t)|.
double apriori_velocity_bound(const SerfatiNorm& u0_norm, double t, double fitted_C);

}  // namespace serfati
