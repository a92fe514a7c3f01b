#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paramres/cli/commands.hpp"
#include "support.hpp"

using namespace paramres;
using namespace paramres::cli;
namespace fs = std::filesystem;

namespace {

const std::string base = R"(
units = "normalized"
[mode_pair]
gamma1 = 1.0
gamma2 = 3.0
alpha1 = 0.01
alpha2 = 0.03
[pump]
epsilon = 1.0
delta = 0.0
)";

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("paramres_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("config errors are ConfigError")
{
    CHECK_THROWS_AS(parse_config("units = \"furlongs\"\n" + base.substr(base.find('['))), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[grid.omega]\nstart = 0\nstop = 1\ncount = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[grid.delta]\nstart = 0\nstop = 1\ncount = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"([mode_pair]
gamma1 = -1.0
gamma2 = 1.0
)"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[homodyne]\nlo = \"triple\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("units = = 3"), ConfigError);
}

TEST_CASE("normalized units rescale every rate by sqrt(G1 G2)")
{
    auto cfg = parse_config(base + "[grid.delta]\nstart = -3\nstop = 3\ncount = 7\n");
    double s = std::sqrt(3.0);
    CHECK(cfg.rate_unit == doctest::Approx(s));
    CHECK(cfg.mode_pair.gamma1 * cfg.mode_pair.gamma2 == doctest::Approx(1.0));
    CHECK(cfg.mode_pair.gamma2 / cfg.mode_pair.gamma1 == doctest::Approx(3.0));
    CHECK(cfg.pump.epsilon == doctest::Approx(1.0 / s));
    auto g = grid_or(cfg, "delta", 0.0);
    REQUIRE(g.size() == 7);
    CHECK(g.front() == doctest::Approx(-3.0 / s));
    CHECK(grid_or(cfg, "epsilon", 0.25) == std::vector<double>{0.25});
    CHECK(has_grid(cfg, "delta"));
    CHECK_FALSE(has_grid(cfg, "theta"));
}

TEST_CASE("threshold table matches the library pointwise")
{
    auto cfg = parse_config(base + "[grid.delta]\nstart = -3\nstop = 3\ncount = 13\n");
    auto tables = compute("threshold", cfg, 1);
    REQUIRE(tables.size() == 1);
    auto& t = tables[0];
    REQUIRE(t.rows.size() == 13);
    // oracle in the raw config units, then expressed in sqrt(G1 G2)
    double s = std::sqrt(3.0);
    auto raw = ModePair::lossless(1, 3, 0.01, 0.03);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        double d = t.number(i, "delta");
        CHECK(t.number(i, "epsilon_th") ==
              doctest::Approx(instability_threshold(raw, d * s).epsilon_th / s).epsilon(1e-12));
    }
}

TEST_CASE("format_double and sha256")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("tables render as CSV and JSON")
{
    Table t{"demo", {{"x", "sqrt(G1G2)"}, {"label", ""}, {"n", ""}}, {{0.5, std::string("a"), 3L}, {Blank{}, std::string("b"), 4L}}};
    auto csv = to_csv(t);
    CHECK(csv.find("0.5") != std::string::npos);
    CHECK(csv.find(",b,4") != std::string::npos);
    CHECK(t.number(0, "x") == 0.5);
    CHECK(csv.find("\n,b,4") != std::string::npos);  // blank cell
    CHECK_THROWS(t.number(1, "x"));
    CHECK(to_json(t).find("\"label\"") != std::string::npos);
    CHECK_THROWS(t.column("missing"));
    CHECK(parse_format("json") == Format::json);
    CHECK_THROWS(parse_format("xml"));
}

TEST_CASE("run: outputs are deterministic and hashed in the manifest")
{
    auto a = scratch("run_a"), b = scratch("run_b");
    RunOptions opt;
    opt.config_path = std::string(PARAMRES_CONFIG_DIR) + "/threshold_unbalanced.toml";
    opt.out_dir = a.string();
    REQUIRE(run("threshold", opt) == 0);
    opt.out_dir = b.string();
    opt.threads = 1;
    REQUIRE(run("threshold", opt) == 0);
    auto body = slurp(a / "threshold.csv");
    CHECK(body == slurp(b / "threshold.csv"));
    CHECK(slurp(a / "manifest.json").find(sha256_hex(body)) != std::string::npos);
    CHECK(fs::exists(a / "detuning_threshold.csv"));
}

TEST_CASE("run: exit codes")
{
    auto dir = scratch("codes");
    RunOptions opt;
    opt.out_dir = (dir / "out").string();

    opt.config_path = (dir / "missing.toml").string();
    CHECK(run("threshold", opt) == 2);

    opt.config_path = std::string(PARAMRES_CONFIG_DIR) + "/threshold_unbalanced.toml";
    CHECK(run("convert", opt) == 2);  // needs the conversion regime
    CHECK(run("nonsense", opt) == 2);

    // an above-threshold pump is out of the noise model's regime: a configuration error
    auto cfg = dir / "above.toml";
    std::ofstream(cfg) << base << "[grid.Delta]\nstart = -1\nstop = 1\ncount = 3\n";
    std::string text = slurp(cfg);
    text.replace(text.find("epsilon = 1.0"), 13, "epsilon = 9.0");
    std::ofstream(cfg) << text;
    opt.config_path = cfg.string();
    CHECK(run("squeeze", opt) == 2);

    // a strongly driven Kerr converter whose self-consistent solve does not settle
    auto hard = dir / "hard.toml";
    std::ofstream(hard) << R"(
[mode_pair]
gamma1 = 1.0
gamma2 = 1.0
alpha1 = 0.1
alpha2 = 0.1
[pump]
epsilon = 1.0
regime = "conversion"
[[drive]]
mode = 1
power = 100.0
[grid.delta]
start = 0.0
stop = 0.5
count = 2
[grid.delta1]
start = -5.0
stop = -4.0
count = 2
)";
    opt.config_path = hard.string();
    CHECK(run("convert", opt) == 3);
    CHECK(fs::exists(dir / "out" / "diagnostics.txt"));
}
