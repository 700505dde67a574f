#pragma once

#include <vector>

#include "serfati/fields.hpp"
#include "serfati/scenarios.hpp"

namespace serfati {

/// A stream function with u = perp(grad psi).
struct StreamFunction {
    ScalarFn psi;
    VectorFn gradient;  ///< grad psi
};

/// psi(x) = -int perp(u) . dz along the straight segment from 0 (plane) or along
/// the conformal ray from its boundary foot (exterior domains). Zero on the boundary.
double stream_function(const Domain& domain, const VectorFn& u, Vec2 x, int panels = 4, int nodes = 12);
/// Wraps stream_function; the gradient is -perp(u).
StreamFunction stream_of(const Domain& domain, const VectorFn& u);

/// Mollified stream function at scale eps = 1 / n. Exterior domains use the chart
/// (angle, |T| - 1) with an odd extension across the boundary, blended with plain
/// mollification for |T| - 1 >= 1/2. Throws ChartError when eps is too large for the chart.
StreamFunction mollified_stream(const Domain& domain, const ScalarFn& psi, int n);

/// u_n = perp grad(phi_n psi_n) with phi_n(x) = a(|x| / 2n); zero for |x| >= 2n.
struct ApproxVelocity {
    int n = 0;
    double eps = 0.0;
    double support_radius = 0.0;
    ScalarFn psi_bar;  ///< phi_n psi_n
    VectorFn u;
    ScalarFn omega;
};

ApproxVelocity approx_velocity(const Domain& domain, const ScalarFn& psi, int n);
ApproxVelocity approx_velocity(const Domain& domain, const VectorFn& u, int n);

struct ApproxRow {
    int n = 0;
    double err_compact = 0.0;    ///< sup over the compact set of |u_n - u|
    SerfatiNorm norm;            ///< sampled |u_n|_S
    double outside_max = 0.0;    ///< max |u_n| + |omega_n| at samples with |x| >= 2n
    double boundary_psi = 0.0;   ///< max |psi_n| on boundary samples
    double tangency = 0.0;       ///< max |u_n . n| on boundary samples
    double divergence = 0.0;     ///< max commuting-stencil divergence on the compact set
};

struct ApproxReport {
    std::string scenario;
    SerfatiNorm reference;       ///< sampled |u|_S
    std::vector<ApproxRow> rows;
    bool decreasing = false;     ///< err_compact strictly decreasing in n
    bool bounded = false;        ///< every |u_n|_S within twice |u|_S
    bool compact = false;        ///< u_n and omega_n vanish exactly outside B_2n
};

struct ApproxOptions {
    std::vector<int> ns{4, 8, 16};
    double compact_half_width = 0.0;  ///< 0: 1 on the plane, 2 outside an obstacle
    double sample_h = 1.0 / 16.0;
    int boundary_samples = 256;
};

ApproxReport approx_report(const Scenario& sc, const ApproxOptions& opt = {});
std::string approx_json(const ApproxReport& r);

}  // namespace serfati
