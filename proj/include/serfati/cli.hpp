#pragma once

#include <string>
#include <vector>

#include "serfati/solver.hpp"

namespace serfati {

/// Exit codes of the command-line tool.
enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitGuardrail = 3, kExitIo = 4 };

inline constexpr const char* kToolVersion = "1.0.0";

/// Parsed command line. Options not used by a verb are ignored.
struct Command {
    std::string verb;
    std::string config_path;
    std::string other_path;  ///< compare: second configuration
    std::string out_dir;
    std::vector<std::string> overrides;  ///< dotted key=value, applied after the file
    int threads = 0;                     ///< 0: SERFATI_THREADS or hardware default
    // certify-kernels
    std::string domain = "all";
    std::string kind;
    std::vector<double> eps;
    std::string baselines_path;
    std::string write_baselines;
    int samples = 100000;
    // check-identity
    double t = 1.0;
    // approx-init
    std::vector<int> ns;
    bool help = false;
};

/// Throws ConfigError with the usage text on malformed input.
/// `--help` sets Command::help and fills `help_text`.
Command parse_args(int argc, const char* const* argv, std::string* help_text = nullptr);

/// Configuration from JSON text, then overrides ("grid.h=0.03125"). Unknown keys raise ConfigError.
/// Accepted keys: scenario, s0, grid.{h, half_width}, dt, T_final, epsilon, truncation_radius,
/// quadrature.{radial_nodes, angular_nodes, panel_ratio, target_tol}, near.{radial_nodes, angular_nodes},
/// tolerances.{penetration_cap, apriori_factor, dense_cache_mb}, fitted_constants.C, boundary_probes,
/// tracer_stride, snapshot_interval, residual_probes, compute_budget. The flat keys written in run
/// reports (h, half_width, t_final, quad_radial_nodes, ...) are read too.
RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Lower-case hex SHA-256 of the text.
std::string sha256_hex(const std::string& text);

/// Runs a command; messages go to stdout and stderr.
int execute(const Command& cmd);

/// parse_args + execute with the exit-code policy.
int cli_main(int argc, const char* const* argv);

}  // namespace serfati
