#pragma once

#include <memory>
#include <string>
#include <vector>

#include "serfati/fields.hpp"
#include "serfati/kernels.hpp"
#include "serfati/quadrature.hpp"
#include "serfati/scenarios.hpp"
#include "serfati/serfati.hpp"
#include "serfati/transport.hpp"

namespace serfati {

struct RunConfig {
    std::string scenario = "blob";
    double s0 = 0.0;            ///< perturbation size passed to the scenario
    double h = 1.0 / 16.0;
    double half_width = 0.0;    ///< 0 selects the scenario default
    double dt = 1.0 / 128.0;
    double t_final = 1.0;
    double eps = 0.0;           ///< 0 selects the scenario default
    QuadratureSpec quad{8, 128, 0.0};  ///< truncation radius 0 selects the scenario default
    NearOptions near;           ///< precise near-field rule used at residual probes
    int boundary_probes = 512;
    int tracer_stride = 8;      ///< forward tracers on every stride-th node
    double snapshot_interval = 0.0;  ///< 0: initial and final snapshots only
    std::string out_dir;        ///< empty: nothing is written
    double apriori_factor = 2.0;     ///< envelope constant = factor * |u0|_S
    double fitted_C = 1.0;           ///< master constant for the Holder exponent
    double penetration_cap = 0.02;   ///< max fraction of fluid nodes projected per step
    std::vector<Vec2> residual_probes;  ///< empty: four default points
    double dense_cache_mb = 600.0;   ///< cap for the precomputed exterior far-field matrix
    bool compute_budget = true;
};

/// Solver state after an integer number of steps.
struct SimState {
    double t = 0.0;
    long steps = 0;
    Domain domain = Domain::full_plane();
    Cutoff cutoff;
    double eps = 0.5;
    double dt = 1.0 / 128.0;
    Grid grid;
    std::vector<char> active;  ///< fluid nodes
    std::vector<char> traced;  ///< fluid nodes plus ghost nodes near the obstacle
    VelocityField velocity;    ///< u at t
    VelocityField previous;    ///< u one step earlier
    VorticityField vorticity;
    /// Accumulated far-field and boundary terms at the nodes (ghost nodes extrapolated).
    GridField<Vec2> far_accum;
    GridField<Vec2> boundary_accum;
    QuadratureSpec quad;

    /// Boundary probes with their own accumulators.
    std::vector<BoundaryNode> boundary;
    std::vector<Vec2> boundary_velocity;
    std::vector<Vec2> boundary_far_accum;
    std::vector<Vec2> boundary_bnd_accum;

    double omega_sup = 0.0;     ///< sup |omega0| used by the node guardrail
    SerfatiNorm u0_norm;
    double envelope_C = 0.0;
    double max_norm = 0.0;      ///< running max of |u(s)|_S over the steps
    long penetrations = 0;

    std::vector<Vec2> tracer_start;
    std::vector<Vec2> tracer_pos;
    std::vector<Vec2> tracer_vel;  ///< u(t, X(t)) at the tracers
};

struct ConservationRow {
    double t = 0.0;
    double circulation = 0.0;     ///< contour integral of u . tau on the boundary probes
    double vorticity_mass = 0.0;  ///< windowed sum of omega h^2 over fluid nodes
    double omega_sup = 0.0;
    double u_sup = 0.0;
    double area_distortion = 0.0;
};

ConservationRow conservation_report(const SimState& state);

/// Error budget of the reconstructed velocity at the current time.
struct Budget {
    double tail = 0.0;        ///< truncation of the far-field integral, times t
    double far_quad = 0.0;    ///< far-field quadrature, node-doubling difference times t
    /// Lattice sums are compared at h and 2h and divided by 2^p - 1, with order p = 1
    /// where the summand jumps (discontinuous vorticity, cells cut by the obstacle), else p = 2.
    double near_grid = 0.0;   ///< near-field lattice sum
    double far_grid = 0.0;    ///< far-field deviation lattice sum, times t
    double total() const { return tail + far_quad + near_grid + far_grid; }
};

struct ProbeRecord {
    double t = 0.0;
    Vec2 x;
    Vec2 near;
    Vec2 far_accum;
    Vec2 boundary_accum;
    double tail_estimate = 0.0;
    Vec2 u_reconstructed;  ///< u0 + near - far - boundary with the precise quadrature
    Vec2 u_solver;         ///< node value carried by the solver
    Vec2 residual;         ///< u_solver - u_reconstructed
};

class Solver {
public:
    Solver(const Scenario& scenario, const RunConfig& config);
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    /// One step: labels, near field, predictor, trapezoidal accumulation,
    /// corrector, guardrails, tracers. Throws GuardrailError on a breach.
    void step();
    /// Steps until t is the multiple of dt nearest to `time`.
    void advance_to(double time);

    const SimState& state() const;
    const Scenario& scenario() const;
    const RunConfig& config() const;

    Budget budget() const;
    std::vector<ProbeRecord> probe_records() const;
    /// Velocity at the current time indexed by grid node; zero at nodes outside the fluid.
    std::vector<Vec2> node_velocity() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RunReport {
    RunConfig config;
    std::string status = "ok";  ///< "ok" or "guardrail"
    std::string message;
    double t_reached = 0.0;
    long steps = 0;
    double runtime_s = 0.0;
    double eps = 0.0;
    double half_width = 0.0;
    double envelope_C = 0.0;
    std::vector<ConservationRow> table;
    std::vector<ProbeRecord> probes;
    Budget budget;
    double max_residual = 0.0;
    long penetrations = 0;
    FlowDiagnostics flow;
    std::vector<std::string> files;
};

/// Runs a configuration to t_final, writing snapshots, probe records and the
/// report under out_dir when it is set. A guardrail breach writes the partial
/// outputs and rethrows.
RunReport run(const RunConfig& config);

/// Resolves scenario defaults (eps, half-width, truncation radius) into the config.
RunConfig resolved(const RunConfig& config, const Scenario& scenario);

std::string report_json(const RunReport& report);
/// Flat JSON form of a configuration, as embedded in reports and manifests.
std::string run_config_json(const RunConfig& config);
std::string probes_ndjson(const std::vector<ProbeRecord>& probes);

}  // namespace serfati
