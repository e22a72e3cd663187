#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "delay_heat/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace delay_heat;
using namespace delay_heat::cli;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    const auto dir = fs::temp_directory_path() / ("delay_heat_" + tag + "_" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

int run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return run(args, out, err);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t data_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
    }
    return n - 1;
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
    std::ifstream in(p);
    return parse_key_values(in).all();
}

}  // namespace

TEST(Config, ParseKeyValuesCommentsAndSections) {
    std::istringstream is("# comment\n[flow]\ntau = 2 ; trailing\na=0.5\n\n[grid]\nnx = 10\n");
    const auto kv = parse_key_values(is);
    EXPECT_EQ(kv.get("tau", ""), "2");
    EXPECT_EQ(kv.get("a", ""), "0.5");
    EXPECT_EQ(kv.get("nx", ""), "10");
}

TEST(Config, DuplicateAndMalformedLinesRejected) {
    std::istringstream dup("tau = 1\n[x]\ntau = 2\n");
    EXPECT_THROW(parse_key_values(dup), ConfigError);
    std::istringstream bad("tau 1\n");
    EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(Config, ParseTimes) {
    EXPECT_EQ(parse_times("0, 0.5,1"), (std::vector<double>{0.0, 0.5, 1.0}));
    const auto r = parse_times("0:1:0.25");
    ASSERT_EQ(r.size(), 5u);
    EXPECT_NEAR(r.back(), 1.0, 1e-15);
    EXPECT_THROW(parse_times("1,0.5"), ConfigError);
    EXPECT_THROW(parse_times("-1"), ConfigError);
    EXPECT_THROW(parse_times("0:1"), ConfigError);
    EXPECT_THROW(parse_times("0:1:0"), ConfigError);
    EXPECT_THROW(parse_times("abc"), ConfigError);
}

TEST(Config, ParseField) {
    const EigenBasis basis(1.0, 5);
    const QuadratureSpec quad;
    EXPECT_NEAR(parse_field("initial", "dirac@0.3", basis, quad).coeff(1), 1.1441228056353685, 1e-14);
    const auto m = parse_field("initial", "modes:2=1.5,5=-1", basis, quad);
    EXPECT_EQ(m.coeff(2), 1.5);
    EXPECT_EQ(m.coeff(5), -1.0);
    EXPECT_EQ(m.coeff(1), 0.0);
    EXPECT_NEAR(parse_field("initial", "polynomial:0,1,-1", basis, quad).coeff(1), 0.18244222961109435, 1e-14);
    EXPECT_THROW(parse_field("initial", "dirac@1.5", basis, quad), ConfigError);
    EXPECT_THROW(parse_field("initial", "modes:6=1", basis, quad), ConfigError);
    EXPECT_THROW(parse_field("initial", "modes:1", basis, quad), ConfigError);
    EXPECT_THROW(parse_field("initial", "gaussian", basis, quad), ConfigError);
}

TEST(Config, ResolveDefaultsAndErrors) {
    const auto c = resolve_config({}, {});
    EXPECT_EQ(c.modes, 60u);
    EXPECT_EQ(c.nx, 300u);
    EXPECT_EQ(c.times, default_panel_times(1.0));
    EXPECT_NEAR(c.step(), 1.0 / 800.0, 1e-18);
    auto one = [](const std::string& k, const std::string& v) {
        KeyValues kv;
        kv.set(k, v);
        return kv;
    };
    EXPECT_THROW(resolve_config(one("bogus", "1"), {}), ConfigError);
    EXPECT_THROW(resolve_config(one("tau", "0"), {}), ConfigError);
    EXPECT_THROW(resolve_config(one("modes", "-3"), {}), ConfigError);
    EXPECT_THROW(resolve_config(one("solver", "euler"), {}), ConfigError);
    EXPECT_THROW(resolve_config(one("history", "grid"), {}), ConfigError);
    EXPECT_THROW(resolve_config(one("quad_nodes", "1"), {}), ConfigError);
    EXPECT_EQ(resolve_config(one("tau", "1"), one("tau", "2")).flow.tau, 2.0);
}

TEST(Cli, OverrideParsing) {
    const auto kv = parse_overrides({"--a", "-1", "--tau=2"});
    EXPECT_EQ(kv.get("a", ""), "-1");
    EXPECT_EQ(kv.get("tau", ""), "2");
    EXPECT_THROW(parse_overrides({"--a"}), ConfigError);
    EXPECT_THROW(parse_overrides({"tau"}), ConfigError);
}

TEST(Cli, UsageExitCodes) {
    EXPECT_EQ(run_cli({}), kExitConfig);
    EXPECT_EQ(run_cli({"--help"}), kExitOk);
    EXPECT_EQ(run_cli({"explode"}), kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--config", "/nonexistent/file.cfg"}), kExitConfig);
    const auto dir = fresh_dir("usage");
    EXPECT_EQ(run_cli({"simulate", "--output", dir.string(), "--bogus", "1"}), kExitConfig);
    EXPECT_EQ(run_cli({"validate", "--output", dir.string(), "--suite", "nonsense"}), kExitConfig);
    fs::remove_all(dir);
}

TEST(Cli, SimulateClosedFormWritesTracesAndManifest) {
    const auto dir = fresh_dir("closed");
    ASSERT_EQ(run_cli({"simulate", "--output", dir.string(), "--modes", "4", "--initial", "modes:1=1",
                       "--times", "0.5,1.5", "--nx", "20"}),
              kExitOk);
    std::ifstream coeffs(dir / "trace_coeffs.csv");
    const auto [times, fields] = read_coeff_csv(coeffs, EigenBasis(1.0, 4));
    ASSERT_EQ(times.size(), 2u);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    EXPECT_NEAR(fields[0].coeff(1), std::exp(-0.5 * pi2), 1e-15);
    EXPECT_NEAR(fields[1].coeff(1), delayed_exp(pi2, 1.5, {}), 1e-15);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["command"], "simulate");
    EXPECT_EQ(manifest["exit_code"], 0);
    EXPECT_EQ(manifest["config"]["solver"], "closed-form");
    EXPECT_EQ(manifest["config"]["modes"], "4");
    EXPECT_TRUE(manifest.contains("version"));
    EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
    ASSERT_EQ(manifest["files"].size(), 2u);
    for (const auto& f : manifest["files"]) {
        EXPECT_EQ(f["rows"].get<std::size_t>(), data_rows(dir / f["path"].get<std::string>()));
    }
    EXPECT_EQ(data_rows(dir / "trace_grid.csv"), 2u * 21u);
    fs::remove_all(dir);
}

TEST(Cli, SimulateIsDeterministic) {
    const auto a = fresh_dir("det_a");
    const auto b = fresh_dir("det_b");
    const std::vector<std::string> common{"--modes", "10", "--history", "constant", "--times", "0.5,1.5"};
    auto args = [&](const fs::path& d) {
        std::vector<std::string> v{"simulate", "--output", d.string()};
        v.insert(v.end(), common.begin(), common.end());
        return v;
    };
    ASSERT_EQ(run_cli(args(a)), kExitOk);
    ASSERT_EQ(run_cli(args(b)), kExitOk);
    EXPECT_EQ(slurp(a / "trace_coeffs.csv"), slurp(b / "trace_coeffs.csv"));
    EXPECT_EQ(slurp(a / "trace_grid.csv"), slurp(b / "trace_grid.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, SolversAgree) {
    const auto cf = fresh_dir("cf");
    const auto pc = fresh_dir("pc");
    const auto rk = fresh_dir("rk");
    const std::vector<std::string> common{"--modes", "3", "--initial", "modes:1=1,2=0.5", "--history", "constant",
                                          "--times", "1,2", "--dt", "0.01"};
    auto args = [&](const fs::path& d, const std::string& solver) {
        std::vector<std::string> v{"simulate", "--output", d.string(), "--solver", solver};
        v.insert(v.end(), common.begin(), common.end());
        return v;
    };
    ASSERT_EQ(run_cli(args(cf, "closed-form")), kExitOk);
    ASSERT_EQ(run_cli(args(pc, "picard")), kExitOk);
    ASSERT_EQ(run_cli(args(rk, "rk4-modes")), kExitOk);
    const EigenBasis basis(1.0, 3);
    auto load = [&](const fs::path& d) {
        std::ifstream in(d / "trace_coeffs.csv");
        return read_coeff_csv(in, basis).second;
    };
    const auto x = load(cf);
    const auto y = load(pc);
    const auto z = load(rk);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LT(hs_norm(x[i] - y[i], {0.0}), 1e-4);
        EXPECT_LT(hs_norm(x[i] - z[i], {0.0}), 1e-6);
    }
    for (const auto& d : {cf, pc, rk}) {
        fs::remove_all(d);
    }
}

TEST(Cli, SolverConfigurationErrors) {
    const auto dir = fresh_dir("solver_err");
    const auto out = dir.string();
    EXPECT_EQ(run_cli({"simulate", "--output", out, "--solver", "picard", "--times", "0.013", "--dt", "0.01"}),
              kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--output", out, "--solver", "rk4-modes", "--dt", "0.2"}), kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--output", out, "--solver", "hybrid"}), kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--output", out, "--solver", "hybrid", "--initial", "modes:1=1", "--ns", "400",
                       "--dt", "0.01"}),
              kExitConfig);
    fs::remove_all(dir);
}

TEST(Cli, HybridWritesGridTraceOnly) {
    const auto dir = fresh_dir("hybrid");
    ASSERT_EQ(run_cli({"simulate", "--output", dir.string(), "--solver", "hybrid", "--initial", "modes:1=1",
                       "--modes", "2", "--nx", "40", "--ns", "40", "--dt", "0.025", "--times", "0.5,1.5"}),
              kExitOk);
    EXPECT_TRUE(fs::exists(dir / "trace_grid.csv"));
    EXPECT_FALSE(fs::exists(dir / "trace_coeffs.csv"));
    EXPECT_EQ(data_rows(dir / "trace_grid.csv"), 2u * 41u);
    fs::remove_all(dir);
}

TEST(Cli, ZeroCouplingIsHeatFlow) {
    const auto dir = fresh_dir("a0");
    ASSERT_EQ(run_cli({"simulate", "--output", dir.string(), "--a", "0", "--modes", "8", "--times", "2.5"}), kExitOk);
    std::ifstream in(dir / "trace_coeffs.csv");
    const auto fields = read_coeff_csv(in, EigenBasis(1.0, 8)).second;
    const auto ref = semigroup_apply(dirac_coeffs(0.3, EigenBasis(1.0, 8)), 2.5);
    EXPECT_LT(hs_norm(fields[0] - ref, {0.0}), 1e-25);
    fs::remove_all(dir);
}

TEST(Cli, GridHistoryFromFileRelativeToConfig) {
    const auto dir = fresh_dir("grid");
    {
        std::ofstream h(dir / "history.csv");
        h << "t,k,coeff\n-1,1,1\n-1,2,0\n0,1,1\n0,2,0\n";
        std::ofstream cfg(dir / "run.cfg");
        cfg << "[model]\nmodes = 2\nhistory = grid\nhistory_file = history.csv\ninitial = modes:1=1\n"
            << "[output]\ntimes = 0.5, 1.7\noutput = " << (dir / "out").string() << "\n";
    }
    ASSERT_EQ(run_cli({"simulate", "--config", (dir / "run.cfg").string()}), kExitOk);
    std::ifstream in(dir / "out" / "trace_coeffs.csv");
    const auto fields = read_coeff_csv(in, EigenBasis(1.0, 2)).second;
    // A constant unit history in mode 1 reproduces the constant-history closed form.
    const EigenBasis basis(1.0, 2);
    const auto exact = solve(unit_mode(basis, 1), HistoryFunction::constant(unit_mode(basis, 1), 1.0), 1.7, {});
    EXPECT_NEAR(fields[1].coeff(1), exact.coeff(1), 1e-12);

    {
        std::ofstream h(dir / "uneven.csv");
        h << "t,k,coeff\n-1,1,1\n-0.2,1,1\n0,1,1\n";
    }
    EXPECT_EQ(run_cli({"simulate", "--config", (dir / "run.cfg").string(), "--history_file", "uneven.csv"}),
              kExitConfig);
    EXPECT_EQ(run_cli({"simulate", "--config", (dir / "run.cfg").string(), "--history_file", "missing.csv"}),
              kExitConfig);
    EXPECT_EQ(run_cli({"diagnose", "--config", (dir / "run.cfg").string(), "--r", "1"}), kExitConfig);
    fs::remove_all(dir);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const auto dir = fresh_dir("env");
    const auto target = dir / "from_env";
    ::setenv("DELAY_HEAT_OUT", target.c_str(), 1);
    const int code = run_cli({"simulate", "--output", (dir / "ignored").string(), "--modes", "2", "--times", "0.5"});
    ::unsetenv("DELAY_HEAT_OUT");
    EXPECT_EQ(code, kExitOk);
    EXPECT_TRUE(fs::exists(target / "manifest.json"));
    EXPECT_FALSE(fs::exists(dir / "ignored"));
    fs::remove_all(dir);
}

TEST(Cli, Figure6Panels) {
    const auto dir = fresh_dir("fig");
    ASSERT_EQ(run_cli({"figure6", "--output", dir.string()}), kExitOk);
    EXPECT_EQ(data_rows(dir / "figure6.csv"), 6u * 301u);
    EXPECT_TRUE(fs::exists(dir / "figure6_plot.py"));
    EXPECT_EQ(run_cli({"figure6", "--output", dir.string(), "--history", "constant"}), kExitConfig);
    fs::remove_all(dir);
}

TEST(Cli, ValidateSuiteWritesResults) {
    const auto dir = fresh_dir("val");
    ASSERT_EQ(run_cli({"validate", "--output", dir.string(), "--suite", "compatibility"}), kExitOk);
    const auto text = slurp(dir / "validate_results.csv");
    EXPECT_EQ(text.rfind("suite,name,value,threshold,pass\n", 0), 0u);
    EXPECT_EQ(text.find(",false\n"), std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["files"][0]["rows"].get<std::size_t>(), data_rows(dir / "validate_results.csv"));
    fs::remove_all(dir);
}

TEST(Cli, DiagnoseCompatibleAndZeroHistory) {
    const auto dir = fresh_dir("diag");
    ASSERT_EQ(run_cli({"diagnose", "--output", (dir / "c").string(), "--modes", "8", "--initial",
                       "modes:1=1,2=0.5", "--history", "characteristic", "--r", "3"}),
              kExitOk);
    const auto kv = read_kv(dir / "c" / "compatibility.txt");
    EXPECT_EQ(kv.at("all_hold"), "true");
    EXPECT_EQ(data_rows(dir / "c" / "endpoint_jumps.csv"), 8u);
    EXPECT_FALSE(fs::exists(dir / "c" / "jumps.csv"));

    ASSERT_EQ(run_cli({"diagnose", "--output", (dir / "z").string(), "--r", "1"}), kExitOk);
    EXPECT_EQ(read_kv(dir / "z" / "compatibility.txt").at("condition_3_derivatives_match"), "false");
    EXPECT_EQ(data_rows(dir / "z" / "jumps.csv"), 5u);
    fs::remove_all(dir);
}

TEST(Binary, ExitCodesFromProcess) {
    const auto dir = fresh_dir("bin");
    const std::string bin = DELAY_HEAT_BIN;
    auto status = [&](const std::string& args) {
        const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status(""), 2);
    EXPECT_EQ(status("--help"), 0);
    EXPECT_EQ(status("validate --suite nonsense --output " + dir.string()), 2);
    EXPECT_EQ(status("simulate --modes 4 --times 0.5 --output " + dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST(ShippedConfigs, RunCleanly) {
    const fs::path configs = DELAY_HEAT_CONFIGS;
    const auto dir = fresh_dir("shipped");
    const std::vector<std::pair<std::string, std::string>> runs{
        {"figure6", "figure.cfg"}, {"simulate", "compatible.cfg"}, {"diagnose", "compatible.cfg"},
        {"simulate", "hybrid.cfg"}};
    for (const auto& [command, file] : runs) {
        const auto out = dir / (command + "_" + file);
        EXPECT_EQ(run_cli({command, "--config", (configs / file).string(), "--output", out.string()}), kExitOk)
            << command << " " << file;
        EXPECT_TRUE(fs::exists(out / "manifest.json"));
    }
    fs::remove_all(dir);
}
