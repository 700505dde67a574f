#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "serfati/fields.hpp"

namespace serfati {

struct SimState;

/// Velocity over one step: v(x, theta) at time t_n + theta dt, theta in [0, 1].
using StepVelocity = std::function<Vec2(Vec2, double)>;

/// Foot of the characteristic through x at t_n + dt, traced back to t_n with
/// classical RK4.
Vec2 trace_back(Vec2 x, double dt, const StepVelocity& v);
/// Forward RK4 step from t_n to t_n + dt.
Vec2 trace_forward(Vec2 x, double dt, const StepVelocity& v);

struct LabelUpdate {
    GridField<Vec2> disp;
    int penetrations = 0;  ///< fluid nodes whose foot or label fell into the obstacle
    int traced = 0;
};

/// Semi-Lagrangian label update. Nodes with trace[k] set are traced back;
/// the others keep a zero displacement. For nodes with fluid[k] set, feet and
/// labels inside the obstacle are projected onto the boundary and counted.
/// Feet outside the window take the displacement extrapolated linearly from the
/// nearest window point.
LabelUpdate advance_labels(const Domain& domain, const GridField<Vec2>& disp,
                           const std::vector<char>& trace, const std::vector<char>& fluid,
                           const StepVelocity& v, double dt);

/// Label update of a solver state with its current velocity frozen over the step.
LabelUpdate advance_labels(const SimState& state, double dt);

/// omega0 at the interpolated label; outside the window omega0(x) and the flag is set.
double vorticity_at(const SimState& state, Vec2 x, bool* outside = nullptr);

struct LogLipschitz {
    double sup = 0.0;       ///< max |u|
    double quotient = 0.0;  ///< max |u(x) - u(y)| / ((1 + log+ |x - y|) |x - y|)
    double total() const { return sup + quotient; }
};

/// Lower estimate of the log-Lipschitz norm from `pair_budget` random pairs
/// (fixed seed) plus all axis-neighbour pairs when the samples come from a grid.
LogLipschitz ll_norm(const std::vector<Vec2>& points, const std::vector<Vec2>& values,
                     std::size_t pair_budget, std::uint64_t seed = 20240611);
LogLipschitz ll_norm(const std::vector<Vec2>& samples, const Grid& grid,
                     const std::vector<char>* active, std::size_t pair_budget,
                     std::uint64_t seed = 20240611);

struct FlowDiagnostics {
    double ll_norm = 0.0;
    double holder_beta = 1.0;      ///< exp(-alpha t), alpha = C max_s |u(s)|_S
    double area_distortion = 0.0;  ///< max |det D(labels) - 1| over interior fluid nodes
};

/// Determinant deviation of the label map on nodes whose four neighbours are active.
double area_distortion(const GridField<Vec2>& disp, const std::vector<char>& active);

FlowDiagnostics flow_diagnostics(const SimState& state, double fitted_C,
                                 std::size_t pair_budget = 20000);

}  // namespace serfati
