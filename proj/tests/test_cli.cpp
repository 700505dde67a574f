#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "serfati/cli.hpp"
#include "serfati/errors.hpp"

using namespace serfati;

namespace {

int run_cli(std::vector<const char*> args) {
    args.insert(args.begin(), "serfati");
    return cli_main(static_cast<int>(args.size()), args.data());
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("argument parsing") {
    const char* argv[] = {"serfati", "--set", "grid.h=0.25", "certify-kernels", "--eps", "0.5,1", "--domain", "plane"};
    Command c = parse_args(8, argv);
    CHECK(c.verb == "certify-kernels");
    CHECK(c.eps == std::vector<double>{0.5, 1.0});
    CHECK(c.domain == "plane");
    REQUIRE(c.overrides.size() == 1);
    const char* bogus[] = {"serfati", "frobnicate"};
    CHECK_THROWS_AS(parse_args(2, bogus), ConfigError);
    CHECK(run_cli({"frobnicate"}) == kExitUsage);
    CHECK(run_cli({"--help"}) == kExitOk);
    CHECK(run_cli({"list-scenarios"}) == kExitOk);
}

TEST_CASE("configuration keys and overrides") {
    RunConfig c = parse_run_config(R"({"scenario": "strip", "grid": {"h": 0.125}, "T_final": 0.5})",
                                   {"dt=0.0625", "fitted_constants.C=2"});
    CHECK(c.scenario == "strip");
    CHECK(c.h == 0.125);
    CHECK(c.t_final == 0.5);
    CHECK(c.dt == 0.0625);
    CHECK(c.fitted_C == 2.0);
    CHECK_THROWS_AS(parse_run_config(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"dt": "fast"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{", {}), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{}", {"dt=-1"}), ConfigError);
}

TEST_CASE("configuration hash") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("commands write outputs and a manifest") {
    auto dir = std::filesystem::temp_directory_path() / "serfati_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::string sim = (dir / "sim").string();
    CHECK(run_cli({"--set", "T_final=0", "--set", "grid.h=0.25", "--out", sim.c_str(), "simulate"}) == kExitOk);
    CHECK(std::filesystem::exists(dir / "sim" / "snapshot_0000.csv"));
    std::string manifest = slurp(dir / "sim" / "manifest.json");
    CHECK(manifest.find("sha256") != std::string::npos);

    std::string ident = (dir / "ident").string();
    CHECK(run_cli({"--set", "scenario=galilean-nonexample", "--out", ident.c_str(), "check-identity", "--t", "1"}) ==
          kExitOk);
    CHECK(std::filesystem::exists(dir / "ident" / "identity.json"));

    std::ofstream(dir / "a.json") << R"({"grid": {"h": 0.25}, "T_final": 0})";
    std::ofstream(dir / "b.json") << R"({"grid": {"h": 0.125}, "T_final": 0})";
    std::string a = (dir / "a.json").string(), b = (dir / "b.json").string();
    CHECK(run_cli({"--config", a.c_str(), "compare", "--other", b.c_str()}) == kExitUsage);

    std::ofstream(dir / "plain") << "x";
    std::string bad = (dir / "plain" / "sub").string();
    CHECK(run_cli({"--set", "T_final=0", "--out", bad.c_str(), "simulate"}) == kExitIo);
    CHECK(run_cli({"--config", (dir / "missing.json").string().c_str(), "simulate"}) != kExitOk);
}
