#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "serfati/errors.hpp"
#include "serfati/solver.hpp"

using namespace serfati;

namespace {

RunConfig coarse_blob() {
    RunConfig c;
    c.scenario = "blob";
    c.h = 1.0 / 8.0;
    c.dt = 1.0 / 32.0;
    c.t_final = 0.25;
    c.compute_budget = false;
    return c;
}

}  // namespace

TEST_CASE("scenario defaults are resolved into the configuration") {
    Scenario sc = build_scenario("blob");
    RunConfig c = resolved(RunConfig{}, sc);
    CHECK(c.eps == sc.default_eps);
    CHECK(c.half_width == sc.default_half_width);
    CHECK(c.quad.truncation_radius == doctest::Approx(50.0 * c.eps));
    Scenario ext = build_scenario("radial-exterior");
    CHECK(resolved(RunConfig{}, ext).quad.truncation_radius == ext.default_truncation_radius);
}

TEST_CASE("a short blob run stays stationary and respects the vorticity maximum") {
    RunConfig c = coarse_blob();
    Scenario sc = build_scenario(c.scenario);
    Solver s(sc, resolved(c, sc));
    s.advance_to(c.t_final);
    const SimState& st = s.state();
    CHECK(st.t == doctest::Approx(0.25));
    CHECK(st.steps == 8);
    double wmax = 0.0;
    for (std::size_t k = 0; k < st.grid.size(); ++k)
        if (st.active[k]) wmax = std::max(wmax, std::abs(st.vorticity.at_node(k)));
    CHECK(wmax <= sc.omega_sup + 1e-12);
    double err = 0.0, ref = 0.0;
    std::vector<Vec2> u = s.node_velocity();
    for (std::size_t k = 0; k < st.grid.size(); ++k) {
        if (!st.active[k]) continue;
        Vec2 x = st.grid.node(k);
        err = std::max(err, norm(u[k] - sc.u0(x)));
        ref = std::max(ref, norm(sc.u0(x)));
    }
    CHECK(err / ref < 2e-2);
    for (const auto& p : s.probe_records()) CHECK(norm(p.residual) < 1e-2);
}

TEST_CASE("zero final time writes the initial snapshot and a report") {
    auto dir = std::filesystem::temp_directory_path() / "serfati_solver_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    RunConfig c = coarse_blob();
    c.t_final = 0.0;
    c.out_dir = dir.string();
    RunReport rep = run(c);
    CHECK(rep.status == "ok");
    CHECK(rep.steps == 0);
    CHECK(std::filesystem::exists(dir / "snapshot_0000.csv"));
    CHECK_FALSE(std::filesystem::exists(dir / "snapshot_0001.csv"));
    CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("negative examples cannot be run") {
    RunConfig c = coarse_blob();
    c.scenario = "constant-vorticity";
    CHECK_THROWS_AS(run(c), NotSerfatiError);
}
