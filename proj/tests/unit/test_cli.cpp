#include <doctest.h>

#include "commands.hpp"
#include "config.hpp"

#include "planesel/core.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace planesel;
using namespace planesel::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("planesel_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

void check_identical(const CommandResult& a, const CommandResult& b)
{
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].filename() == b.files[i].filename());
        CHECK(slurp(a.files[i]) == slurp(b.files[i]));
    }
}

fs::path write_rabi_data(const fs::path& dir)
{
    fs::create_directories(dir);
    const fs::path p = dir / "rabi.csv";
    std::ofstream out(p);
    out << "t_s,value,sigma\n";
    for (int k = 0; k < 30; ++k) {
        const double t = k * 2e-5;
        const double y = 0.744 * 0.05 * 0.982 +
                         0.744 * 0.95 * 0.5 * (1.0 + std::sin(2.0 * 3.141592653589793 * 5e3 * t + 0.4));
        out << t << ',' << y + 0.004 * ((k % 3) - 1) << ",0.01\n";
    }
    return p;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults")
{
    RunConfig cfg;
    CHECK(cfg.integer("run.seed") == 1);
    CHECK(cfg.integer("run.samples") == 1000);
    CHECK(cfg.number("trap.lamb_dicke") == 0.4);
    CHECK(cfg.text("budget.source_model") == "dressed");
    CHECK(cfg.list("crosstalk.sizes").size() == 2);
    CHECK_FALSE(cfg.boolean("hologram.write_csv"));
}

TEST_CASE("canonical form round-trips byte for byte")
{
    std::istringstream in("[run]\nseed = 7  # comment\n[trap]\nlamb_dicke = 0.3\n"
                          "[crosstalk]\nsizes = [2, 3, 1_0]\n[fit]\nmodel = \"rb\"\n");
    const auto cfg = RunConfig::parse(in, "t.toml");
    CHECK(cfg.integer("run.seed") == 7);
    CHECK(cfg.list("crosstalk.sizes")[2] == 10.0);
    std::ostringstream a;
    cfg.write(a);
    std::istringstream back(a.str());
    std::ostringstream b;
    RunConfig::parse(back, "back").write(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("unknown keys report their line")
{
    std::istringstream in("[run]\nseed = 2\n\n[trap]\nlamb_dikce = 0.3\n");
    try {
        RunConfig::parse(in, "x.toml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("x.toml:5") != std::string::npos);
        CHECK(msg.find("trap.lamb_dikce") != std::string::npos);
    }
}

TEST_CASE("type mismatches are rejected")
{
    std::istringstream a("[run]\nseed = \"seven\"\n");
    CHECK_THROWS_AS(RunConfig::parse(a), ConfigError);
    std::istringstream b("[hologram]\nwrite_csv = 1\n");
    CHECK_THROWS_AS(RunConfig::parse(b), ConfigError);
    RunConfig cfg;
    CHECK_THROWS_AS(cfg.set("run.seed", std::string("x")), ConfigError);
    cfg.set("run.samples", 2.5);
    CHECK_THROWS_AS(cfg.integer("run.samples"), ConfigError);
}

TEST_CASE("reruns are byte-identical")
{
    RunConfig cfg;
    cfg.set("run.samples", 20.0);

    const auto s1 = cmd_spectrum(cfg, scratch("s1"));
    const auto s2 = cmd_spectrum(cfg, scratch("s2"));
    check_identical(s1, s2);

    const auto b1 = cmd_budget(cfg, scratch("b1"));
    cfg.set("run.threads", 3.0);
    const auto b2 = cmd_budget(cfg, scratch("b2"));
    REQUIRE(b1.files.size() == b2.files.size());
    for (std::size_t i = 1; i < b1.files.size(); ++i)
        CHECK(slurp(b1.files[i]) == slurp(b2.files[i]));

    const auto data = write_rabi_data(scratch("data"));
    const auto f1 = cmd_fit(cfg, data, scratch("f1"));
    const auto f2 = cmd_fit(cfg, data, scratch("f2"));
    check_identical(f1, f2);
}

TEST_CASE("resolved configuration reproduces a run")
{
    RunConfig cfg;
    cfg.set("run.samples", 20.0);
    cfg.set("run.seed", 11.0);
    const fs::path dir = scratch("r1");
    const auto first = cmd_budget(cfg, dir);
    std::ifstream in(dir / "config_resolved.toml");
    REQUIRE(in.good());
    const auto again = RunConfig::parse(in, "config_resolved.toml");
    check_identical(first, cmd_budget(again, scratch("r2")));
}

}  // TEST_SUITE cli
