#include "serfati/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "serfati/bounds.hpp"
#include "serfati/errors.hpp"
#include "serfati/estimates.hpp"
#include "serfati/initdata.hpp"
#include "serfati/parallel.hpp"
#include "serfati/scenarios.hpp"

namespace serfati {

using json = nlohmann::json;

namespace {

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else {
        out[prefix] = j;
    }
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);
    }
}

template <class T>
T as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("configuration key '" + key + "' has the wrong type");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<Vec2> default_points(const std::string& domain) {
    if (domain == "plane") return {{0.0, 0.0}, {1.0, 2.0}};
    if (domain == "disk") return {{1.5, 0.0}, {3.0, 0.0}};
    return {{2.5, 0.0}, {0.0, 2.5}};
}

Domain domain_named(const std::string& name) {
    if (name == "plane") return Domain::full_plane();
    if (name == "disk") return Domain::exterior_unit_disk();
    if (name == "ellipse") return Domain::exterior_obstacle(joukowski_ellipse_map());
    throw ConfigError("unknown domain '" + name + "' (plane, disk, ellipse or all)");
}

std::string prepare_out(const std::string& dir) {
    if (dir.empty()) return dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

struct Manifest {
    json j;
    Manifest(const Command& cmd, int argc, const char* const* argv) {
        j["tool"] = "serfati-cli";
        j["version"] = kToolVersion;
        j["verb"] = cmd.verb;
        json args = json::array();
        for (int i = 0; i < argc; ++i) args.push_back(argv ? argv[i] : "");
        j["argv"] = args;
        j["outputs"] = json::array();
        j["status"] = "ok";
    }
    void config(const RunConfig& c, const std::string& key = "config") {
        std::string text = run_config_json(c);
        j[key] = json::parse(text);
        j[key + "_sha256"] = sha256_hex(text);
    }
    void output(const std::string& name) { j["outputs"].push_back(name); }
    void write(const std::string& dir) const {
        if (dir.empty()) return;
        write_atomic(dir + "/manifest.json", j.dump(2) + "\n");
    }
};

void emit(const std::string& dir, const std::string& name, const std::string& content, Manifest& m) {
    if (dir.empty()) return;
    write_atomic(dir + "/" + name, content);
    m.output(name);
}

RunConfig command_config(const Command& cmd) {
    if (cmd.config_path.empty()) return parse_run_config("{}", cmd.overrides);
    return load_run_config(cmd.config_path, cmd.overrides);
}

// argv of the running command, for the manifest
int g_argc = 0;
const char* const* g_argv = nullptr;

int do_simulate(const Command& cmd) {
    RunConfig cfg = command_config(cmd);
    cfg.out_dir = prepare_out(cmd.out_dir.empty() ? "out" : cmd.out_dir);
    Manifest m(cmd, g_argc, g_argv);
    Scenario sc = build_scenario(cfg.scenario, ScenarioParams{cfg.s0});
    m.config(resolved(cfg, sc));
    m.j["fitted_constants"] = {{"C", cfg.fitted_C}, {"apriori_factor", cfg.apriori_factor}};
    try {
        RunReport rep = run(cfg);
        for (const auto& f : rep.files) m.output(f);
        m.write(cfg.out_dir);
        std::printf("%s: t = %.6g after %ld steps, max probe residual %.3e, budget %.3e, %.1f s\n",
                    cfg.scenario.c_str(), rep.t_reached, rep.steps, rep.max_residual, rep.budget.total(),
                    rep.runtime_s);
        return kExitOk;
    } catch (const GuardrailError& e) {
        m.j["status"] = "guardrail";
        m.j["message"] = e.what();
        m.write(cfg.out_dir);
        std::fprintf(stderr, "guardrail: %s\n", e.what());
        return kExitGuardrail;
    }
}

int do_certify(const Command& cmd) {
    Manifest m(cmd, g_argc, g_argv);
    const std::string dir = prepare_out(cmd.out_dir);
    Baselines base;
    CertifyOptions opt;
    if (cmd.write_baselines.empty()) {
        std::string path = cmd.baselines_path.empty() ? default_baselines_path() : cmd.baselines_path;
        base = load_baselines(path);
        opt.baselines = &base;
        m.j["baselines"] = path;
    }
    std::vector<EstimateReport> reports;
    if (cmd.domain == "all") {
        reports = standard_certification(opt, cmd.samples);
    } else {
        Domain d = domain_named(cmd.domain);
        KernelKind kind = cmd.kind.empty() ? (d.has_boundary() ? KernelKind::Hydrodynamic : KernelKind::DomainK)
                                           : kernel_kind_from_string(cmd.kind);
        std::vector<double> eps = cmd.eps;
        if (eps.empty()) eps = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
        auto pts = default_points(cmd.domain);
        KernelKind near_kind = kind == KernelKind::Hydrodynamic ? KernelKind::DomainK : kind;
        reports.push_back(certify_near_l1(d, near_kind, eps, pts, opt));
        reports.push_back(certify_far_l1(d, kind, eps, pts, opt));
        reports.push_back(certify_rearrangement(d, near_kind, {1.0, 1.25, 1.5, 1.75}, {0.5, 1.0, 2.0},
                                                pts.back(), opt));
        if (d.kind() != DomainKind::ExteriorObstacle)
            reports.push_back(certify_hlog(d, {1e-2, 1e-3, 1e-4},
                                           d.has_boundary() ? PairFamily::RadialFlow : PairFamily::Rotation, opt));
        else
            for (auto& r : certify_pointwise(d, cmd.samples, opt)) reports.push_back(std::move(r));
    }
    if (!cmd.write_baselines.empty()) {
        Baselines b = freeze_baselines(reports);
        save_baselines(b, cmd.write_baselines);
        m.j["baselines_written"] = cmd.write_baselines;
    }
    json fc = json::object();
    for (const auto& r : reports) fc[r.name] = r.fitted_constant;
    m.j["fitted_constants"] = fc;
    emit(dir, "estimates.json", estimate_json(reports), m);
    emit(dir, "estimates.csv", estimate_csv(reports), m);
    m.write(dir);
    for (const auto& r : reports)
        std::printf("%-48s max ratio %-12.6g spread %-8.4g constant %-12.6g %s\n", r.name.c_str(), r.max_ratio(),
                    r.spread(), r.fitted_constant, r.verdict.c_str());
    return kExitOk;
}

int do_identity(const Command& cmd) {
    RunConfig cfg = command_config(cmd);
    Manifest m(cmd, g_argc, g_argv);
    const std::string dir = prepare_out(cmd.out_dir);
    Scenario sc = build_scenario(cfg.scenario, ScenarioParams{cfg.s0});
    cfg = resolved(cfg, sc);
    cfg.t_final = cmd.t;
    m.config(cfg);
    json out;
    out["scenario"] = sc.name;
    out["t"] = cmd.t;
    json rows = json::array();
    if (sc.exact_velocity) {
        // identity evaluated on the exact trajectory
        Trajectory traj;
        long steps = std::max(1L, std::lround(cmd.t / cfg.dt));
        for (long k = 0; k <= steps; ++k) {
            double tk = cmd.t * k / steps;
            traj.times.push_back(tk);
            traj.u.push_back([&sc, tk](Vec2 x) { return sc.exact_velocity(tk, x); });
            if (sc.exact_labels)
                traj.omega.push_back([&sc, tk](Vec2 x) { return sc.omega0(sc.exact_labels(tk, x)); });
            else
                traj.omega.push_back(sc.omega0);
        }
        std::vector<Vec2> pts = cfg.residual_probes;
        if (pts.empty()) pts = sc.domain.has_boundary() ? std::vector<Vec2>{{2.0, 0.0}, {0.0, 2.5}}
                                                          : std::vector<Vec2>{{0.0, 0.0}, {0.5, 0.5}};
        for (Vec2 x : pts) {
            ResidualResult r = serfati_residual(sc.domain, Cutoff::standard(), cfg.eps, traj, x, cfg.quad, cfg.near);
            rows.push_back({{"x", {x.x1, x.x2}},
                            {"residual", {r.residual.x1, r.residual.x2}},
                            {"near", {r.near.x1, r.near.x2}},
                            {"far_accum", {r.far_accum.x1, r.far_accum.x2}},
                            {"boundary_accum", {r.boundary_accum.x1, r.boundary_accum.x2}},
                            {"tail_estimate", r.tail_estimate}});
            std::printf("x = (%g, %g): residual (%.6g, %.6g), tail estimate %.3e\n", x.x1, x.x2, r.residual.x1,
                        r.residual.x2, r.tail_estimate);
        }
        out["source"] = "exact";
    } else {
        cfg.compute_budget = true;
        RunReport rep = run(cfg);
        for (const auto& p : rep.probes) {
            rows.push_back({{"x", {p.x.x1, p.x.x2}},
                            {"residual", {p.residual.x1, p.residual.x2}},
                            {"near", {p.near.x1, p.near.x2}},
                            {"far_accum", {p.far_accum.x1, p.far_accum.x2}},
                            {"boundary_accum", {p.boundary_accum.x1, p.boundary_accum.x2}},
                            {"tail_estimate", p.tail_estimate}});
            std::printf("x = (%g, %g): residual (%.3e, %.3e)\n", p.x.x1, p.x.x2, p.residual.x1, p.residual.x2);
        }
        out["source"] = "solver";
        out["budget"] = rep.budget.total();
        out["max_residual"] = rep.max_residual;
        std::printf("max residual %.3e, budget %.3e\n", rep.max_residual, rep.budget.total());
    }
    out["probes"] = rows;
    emit(dir, "identity.json", out.dump(2) + "\n", m);
    m.write(dir);
    return kExitOk;
}

int do_approx(const Command& cmd) {
    RunConfig cfg = command_config(cmd);
    Manifest m(cmd, g_argc, g_argv);
    const std::string dir = prepare_out(cmd.out_dir);
    Scenario sc = build_scenario(cfg.scenario, ScenarioParams{cfg.s0});
    m.config(resolved(cfg, sc));
    ApproxOptions opt;
    if (!cmd.ns.empty()) opt.ns = cmd.ns;
    ApproxReport r = approx_report(sc, opt);
    emit(dir, "approx.json", approx_json(r), m);
    m.write(dir);
    for (const auto& row : r.rows)
        std::printf("n = %-3d sup|u_n - u| = %.3e  |u_n|_S = %.6g  outside = %g  tangency = %.1e\n", row.n,
                    row.err_compact, row.norm.total(), row.outside_max, row.tangency);
    std::printf("reference |u|_S = %.6g; decreasing %s, bounded %s, compact %s\n", r.reference.total(),
                r.decreasing ? "yes" : "no", r.bounded ? "yes" : "no", r.compact ? "yes" : "no");
    return kExitOk;
}

int do_compare(const Command& cmd) {
    if (cmd.other_path.empty()) throw ConfigError("compare needs --other with the second configuration");
    RunConfig a = command_config(cmd);
    RunConfig b = load_run_config(cmd.other_path, cmd.overrides);
    Manifest m(cmd, g_argc, g_argv);
    const std::string dir = prepare_out(cmd.out_dir);
    m.config(resolved(a, build_scenario(a.scenario, ScenarioParams{a.s0})), "config");
    m.config(resolved(b, build_scenario(b.scenario, ScenarioParams{b.s0})), "other_config");
    BoundParams p;
    p.C = a.fitted_C;
    p.t_horizon = a.t_final;
    m.j["fitted_constants"] = {{"C", p.C}};
    ComparisonReport r = compare_runs(a, b, p);
    emit(dir, "comparison.json", comparison_json(r), m);
    emit(dir, "comparison.csv", comparison_csv(r), m);
    m.write(dir);
    const auto& last = r.rows.back();
    std::printf("s0 = %.3e (measured %.3e): at t = %g |u1 - u2| = %.3e, bound %.3e; h <= M %s, within bound %s\n",
                r.params.s0, r.s0_measured, last.t, last.du, last.bound, r.h_le_M ? "yes" : "no",
                r.within_bound ? "yes" : "no");
    return kExitOk;
}

int do_list() {
    for (const auto& n : list_scenarios()) {
        Scenario sc = build_scenario(n);
        std::printf("%-22s %-26s %s%s\n", n.c_str(), sc.domain.name().c_str(), sc.notes.c_str(),
                    sc.experimental ? " [experimental]" : "");
    }
    for (const auto& n : list_negative_scenarios()) {
        try {
            build_scenario(n);
        } catch (const NotSerfatiError& e) {
            std::printf("%-22s %-26s refused: %s\n", n.c_str(), "-", e.what());
        }
    }
    return kExitOk;
}

}  // namespace

std::string sha256_hex(const std::string& text) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    std::map<std::string, json> flat;
    flatten(j, "", flat);
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        flat[o.substr(0, eq)] = parse_value(o.substr(eq + 1));
    }

    RunConfig c;
    for (const auto& [key, v] : flat) {
        if (key == "scenario") c.scenario = as<std::string>(v, key);
        else if (key == "s0") c.s0 = as<double>(v, key);
        else if (key == "h" || key == "grid.h") c.h = as<double>(v, key);
        else if (key == "half_width" || key == "grid.half_width") c.half_width = as<double>(v, key);
        else if (key == "dt") c.dt = as<double>(v, key);
        else if (key == "T_final" || key == "t_final") c.t_final = as<double>(v, key);
        else if (key == "epsilon" || key == "eps") c.eps = as<double>(v, key);
        else if (key == "truncation_radius" || key == "quadrature.truncation_radius")
            c.quad.truncation_radius = as<double>(v, key);
        else if (key == "quadrature.radial_nodes" || key == "quad_radial_nodes") c.quad.radial_nodes = as<int>(v, key);
        else if (key == "quadrature.angular_nodes" || key == "quad_angular_nodes")
            c.quad.angular_nodes = as<int>(v, key);
        else if (key == "quadrature.panel_ratio" || key == "quad_panel_ratio") c.quad.panel_ratio = as<double>(v, key);
        else if (key == "quadrature.target_tol" || key == "quad_target_tol") c.quad.target_tol = as<double>(v, key);
        else if (key == "near.radial_nodes" || key == "near_radial_nodes") c.near.radial_nodes = as<int>(v, key);
        else if (key == "near.angular_nodes" || key == "near_angular_nodes") c.near.angular_nodes = as<int>(v, key);
        else if (key == "tolerances.penetration_cap" || key == "penetration_cap")
            c.penetration_cap = as<double>(v, key);
        else if (key == "tolerances.apriori_factor" || key == "apriori_factor") c.apriori_factor = as<double>(v, key);
        else if (key == "tolerances.dense_cache_mb" || key == "dense_cache_mb") c.dense_cache_mb = as<double>(v, key);
        else if (key == "fitted_constants.C" || key == "fitted_C") c.fitted_C = as<double>(v, key);
        else if (key == "boundary_probes") c.boundary_probes = as<int>(v, key);
        else if (key == "tracer_stride") c.tracer_stride = as<int>(v, key);
        else if (key == "snapshot_interval") c.snapshot_interval = as<double>(v, key);
        else if (key == "compute_budget") c.compute_budget = as<bool>(v, key);
        else if (key == "residual_probes") {
            c.residual_probes.clear();
            for (const auto& p : as<std::vector<std::vector<double>>>(v, key)) {
                if (p.size() != 2) throw ConfigError("residual probes are [x, y] pairs");
                c.residual_probes.push_back({p[0], p[1]});
            }
        } else if (key == "out_dir") {
            // output location comes from the command line
        } else {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    }
    if (!(c.h > 0.0)) throw ConfigError("grid spacing h must be positive");
    if (!(c.dt > 0.0)) throw ConfigError("time step dt must be positive");
    if (!(c.t_final >= 0.0)) throw ConfigError("T_final must be nonnegative");
    if (c.eps < 0.0 || c.half_width < 0.0 || c.quad.truncation_radius < 0.0)
        throw ConfigError("epsilon, half_width and truncation_radius must be nonnegative (0 selects a default)");
    if (c.quad.radial_nodes < 1 || c.quad.angular_nodes < 4) throw ConfigError("quadrature node counts too small");
    if (!(c.quad.panel_ratio > 1.0)) throw ConfigError("panel ratio must exceed 1");
    if (c.tracer_stride < 1 || c.boundary_probes < 0) throw ConfigError("tracer stride and probe counts");
    if (!(c.fitted_C > 0.0)) throw ConfigError("fitted constant must be positive");
    return c;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    return parse_run_config(read_file(path), overrides);
}

Command parse_args(int argc, const char* const* argv, std::string* help_text) {
    Command cmd;
    CLI::App app{"Euler flows with bounded vorticity: simulation and kernel certification", "serfati"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", cmd.config_path, "JSON configuration file");
    app.add_option("--out", cmd.out_dir, "output directory");
    app.add_option("--set", cmd.overrides, "override a configuration key (dotted.key=value)");
    app.add_option("--threads", cmd.threads, "worker threads (default: SERFATI_THREADS)")->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "run a scenario and write snapshots");
    auto* cert = app.add_subcommand("certify-kernels", "kernel estimate sweeps");
    cert->add_option("--domain", cmd.domain, "plane, disk, ellipse or all");
    cert->add_option("--kind", cmd.kind, "kernel: K, K_Omega, J_Omega, Kbar, L");
    cert->add_option("--eps", cmd.eps, "cutoff scales")->delimiter(',');
    cert->add_option("--baselines", cmd.baselines_path, "frozen constants file");
    cert->add_option("--write-baselines", cmd.write_baselines, "freeze measured constants to this file");
    cert->add_option("--samples", cmd.samples, "random pairs per pointwise sweep")->check(CLI::PositiveNumber);
    auto* ident = app.add_subcommand("check-identity", "evaluate the velocity identity residual");
    ident->add_option("--t", cmd.t, "final time")->check(CLI::NonNegativeNumber);
    auto* approx = app.add_subcommand("approx-init", "compactly supported approximations of the initial data");
    approx->add_option("--n", cmd.ns, "approximation indices")->delimiter(',')->check(CLI::PositiveNumber);
    auto* cmp = app.add_subcommand("compare", "paired runs and the continuous-dependence bound");
    cmp->add_option("--other", cmd.other_path, "second configuration")->required();
    auto* list = app.add_subcommand("list-scenarios", "shipped scenarios");
    (void)sim;
    (void)list;

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.push_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        cmd.help = true;
        if (help_text) *help_text = app.help();
        return cmd;
    } catch (const CLI::CallForVersion&) {
        cmd.help = true;
        if (help_text) *help_text = std::string(kToolVersion) + "\n";
        return cmd;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string(e.what()) + "\n" + app.help());
    }
    cmd.verb = app.get_subcommands().front()->get_name();
    return cmd;
}

int execute(const Command& cmd) {
    if (cmd.threads > 0) set_thread_count(cmd.threads);
    if (cmd.verb == "simulate") return do_simulate(cmd);
    if (cmd.verb == "certify-kernels") return do_certify(cmd);
    if (cmd.verb == "check-identity") return do_identity(cmd);
    if (cmd.verb == "approx-init") return do_approx(cmd);
    if (cmd.verb == "compare") return do_compare(cmd);
    if (cmd.verb == "list-scenarios") return do_list();
    throw ConfigError("unknown verb '" + cmd.verb + "'");
}

int cli_main(int argc, const char* const* argv) {
    g_argc = argc;
    g_argv = argv;
    try {
        std::string help;
        Command cmd = parse_args(argc, argv, &help);
        if (cmd.help) {
            std::fputs(help.c_str(), stdout);
            return kExitOk;
        }
        return execute(cmd);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const NotSerfatiError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const BranchError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const GuardrailError& e) {
        std::fprintf(stderr, "guardrail: %s\n", e.what());
        return kExitGuardrail;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
}

}  // namespace serfati
