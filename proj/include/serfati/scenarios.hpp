#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "serfati/fields.hpp"
#include "serfati/geometry.hpp"

namespace serfati {

using TimeVectorFn = std::function<Vec2(double, Vec2)>;

struct Scenario {
    std::string name;
    Domain domain = Domain::full_plane();
    VectorFn u0;
    ScalarFn omega0;
    /// Compact support of omega0 (ball), when it has one.
    std::optional<double> support_radius;
    Vec2 support_center;
    /// sup |omega0| over the fluid, known in closed form.
    double omega_sup = 0.0;
    /// Exact velocity u(t, x) when known (stationary flows, the non-example).
    TimeVectorFn exact_velocity;
    /// Exact back-to-labels map A(t, x) when known.
    TimeVectorFn exact_labels;
    bool stationary = false;
    bool experimental = false;
    /// u0 may be evaluated at points inside the obstacle (ghost nodes).
    bool u0_valid_in_obstacle = true;
    /// omega0 has jump discontinuities.
    bool discontinuous_vorticity = false;
    /// Suggested run parameters.
    double default_eps = 0.5;
    double default_half_width = 2.0;
    /// Far-field truncation radius; 0 selects 50 eps. Non-decaying velocities need more.
    double default_truncation_radius = 0.0;
    std::string notes;
};

struct ScenarioParams {
    /// Perturbation size in the Serfati norm: fields are scaled by 1 + s0 / |u0|_S.
    double s0 = 0.0;
};

/// Names accepted by build_scenario.
std::vector<std::string> list_scenarios();
/// Names with a refusing constructor.
std::vector<std::string> list_negative_scenarios();

/// Throws ConfigError for unknown names and NotSerfatiError for the negative examples.
Scenario build_scenario(const std::string& name, const ScenarioParams& params = {});

/// Radial profile helpers for the polynomial blob omega = (1 - r^2/rho^2)^4.
double blob_vorticity(Vec2 x, Vec2 center, double radius);
Vec2 blob_velocity(Vec2 x, Vec2 center, double radius);
double blob_mass(double radius);

/// |u0|_S sampled on a grid over the scenario's default window.
SerfatiNorm scenario_norm(const Scenario& sc, double h);

struct ScenarioReport {
    std::string name;
    double curl_error = 0.0;         ///< max |curl_h u0 - omega0| away from jumps
    double divergence = 0.0;         ///< max |div_h u0|
    double tangency = 0.0;           ///< max |u0 . n| on 256 boundary nodes
    SerfatiNorm norm;
    std::vector<double> ref_times;
    std::vector<double> ref_errors;  ///< sup |u_sim - u_ref| / sup |u_ref| at ref_times
    std::vector<double> label_errors;
};

struct ValidateOptions {
    bool run_solver = false;
    double dt = 1.0 / 128.0;
    double t_final = 1.0;
};

ScenarioReport validate_scenario(const Scenario& sc, double h, const ValidateOptions& opt = {});

}  // namespace serfati
