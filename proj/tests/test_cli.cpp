#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <ucfem/cli.hpp>

namespace ucfem {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("ucfem_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string config_error(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& sub, const RunConfig& cfg, const cli::Options& opt = {}) {
    std::ostringstream out, err;
    const int code = cli::dispatch(sub, cfg, opt, out, err);
    return {code, out.str(), err.str()};
}

TEST(Config, Defaults) {
    const RunConfig c = parse_config("");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(c.geometry.r1, 0.25);
    EXPECT_EQ(c.geometry.r3, 1.0);
    EXPECT_EQ(c.k, 1);
    EXPECT_EQ(c.levels, (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_EQ(c.perturbation.mode, PerturbationMode::Oscillatory);
    EXPECT_EQ(c.perturbation.epsilon, 0.0);
    EXPECT_EQ(c.hmin, HminPolicy::Off);
}

TEST(Config, ParsesEveryKind) {
    const RunConfig c = parse_config(R"(# comment
geometry.r1 = 0.2   # trailing comment
k = 2
levels = 1..3
exact.n = 4
exact.part = im
perturbation.mode = nodal_noise
perturbation.epsilon = 1e-3
hmin = auto
hmin.u_norm = 2.5
rate_window = 1..3
exponents.alpha1 = 0.6
three_ball.alpha_tests = 0.5,0.7
)");
    EXPECT_EQ(c.geometry.r1, 0.2);
    EXPECT_EQ(c.k, 2);
    EXPECT_EQ(c.levels, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(c.exact.n, 4);
    EXPECT_EQ(c.exact.part, analysis::Part::Im);
    EXPECT_EQ(c.perturbation.mode, PerturbationMode::NodalNoise);
    EXPECT_EQ(c.perturbation.epsilon, 1e-3);
    EXPECT_EQ(c.hmin, HminPolicy::Auto);
    EXPECT_EQ(c.hmin_u_norm, 2.5);
    EXPECT_EQ(c.rate_window, (analysis::LevelWindow{1, 3}));
    EXPECT_EQ(c.alpha1, 0.6);
    EXPECT_FALSE(c.alpha2.has_value());
    EXPECT_EQ(c.three_ball_alpha_tests, (std::vector<double>{0.5, 0.7}));
    EXPECT_EQ(parse_config("levels = 2,4,5").levels, (std::vector<int>{2, 4, 5}));
    EXPECT_EQ(parse_config("hmin = 0.05").hmin_value, 0.05);
}

TEST(Config, ErrorsNameKeyAndConstraint) {
    EXPECT_EQ(config_error("geometry.r2 = 2"), "geometry: r2 < r3 violated");
    EXPECT_EQ(config_error("k = 3"), "k: k in {1,2} violated");
    EXPECT_EQ(config_error("sectors = 7"), "sectors: sectors >= 6 and even violated");
    EXPECT_EQ(config_error("levels = 3,2"), "levels: levels must be strictly increasing");
    EXPECT_EQ(config_error("perturbation.mode = none\nperturbation.epsilon = 0.1"),
              "perturbation.mode: mode none requires epsilon = 0");
    EXPECT_NE(config_error("exponents.alpha2 = 1.5").find("exponents.alpha2"), std::string::npos);
    EXPECT_NE(config_error("rate_window = 3..3").find("rate_window"), std::string::npos);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(config_error("k = 1\n\nbogus = 3\n"), "line 3: bogus: unknown key");
    EXPECT_EQ(config_error("k = 1\nlevel 3\n"), "line 2: expected 'key = value'");
    EXPECT_NE(config_error("k = 1\nk = 2\n").find("line 2: k: duplicate key"), std::string::npos);
    EXPECT_NE(config_error("perturbation.epsilon = abc").find("line 1: perturbation.epsilon"), std::string::npos);
    EXPECT_NE(config_error("geometry.r1 = nan").find("line 1"), std::string::npos);
    EXPECT_NE(config_error("sectors = 8.5").find("line 1: sectors"), std::string::npos);
}

TEST(Config, OverridesApplyInOrder) {
    const auto c = apply_overrides(RunConfig{}, {{"k", "2"}, {"level", "1"}, {"k", "1"}});
    EXPECT_EQ(c.k, 1);
    EXPECT_EQ(c.level, 1);
    EXPECT_THROW(apply_overrides(RunConfig{}, {{"nope", "1"}}), ConfigError);
}

TEST(Config, TextRoundTrip) {
    RunConfig c;
    c.geometry = {0.1, 0.37, 1.3};
    c.perturbation.epsilon = 1.0 / 3.0;
    c.perturbation.seed = 123456789;
    c.hmin = HminPolicy::Value;
    c.hmin_value = 0.0711;
    c.alpha1 = 0.6;
    c.alpha2 = 0.7;
    c.output_csv = "a.csv";
    EXPECT_EQ(parse_config(to_config_text(c)), c);
}

TEST(Cli, AlphaOutput) {
    const auto r = run("alpha", RunConfig{});
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_EQ(r.out, "alpha=0.5 beta=1.0\n");
    RunConfig c;
    c.alpha1 = 0.5;
    c.alpha2 = 0.75;
    EXPECT_EQ(run("alpha", c).out, "alpha=0.5 beta=1.0 alpha_tilde=0.6666666666666666\n");
}

TEST(Cli, ThreeBallTable) {
    RunConfig c;
    c.three_ball_n_max = 10;
    c.three_ball_alpha_tests = {0.6};
    const auto r = run("three-ball", c);
    EXPECT_EQ(r.code, cli::kOk);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "n alpha_test=0.6");
    std::string last;
    while (std::getline(lines, line)) last = line;
    EXPECT_EQ(last, "10 4.000000000000");
}

TEST(Cli, MeshWritesFile) {
    const auto dir = scratch_dir("mesh");
    RunConfig c;
    c.level = 1;
    const auto r = run("mesh", c, {dir, false});
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_NE(r.out.find("vertices=89 triangles=160"), std::string::npos);
    EXPECT_NE(r.out.find("violations=0"), std::string::npos);
    std::ifstream f(dir / "mesh_L1.txt");
    EXPECT_EQ(read_mesh(f, c.geometry).triangles.size(), 160u);
}

TEST(Cli, PoissonAndUc) {
    RunConfig c;
    c.level = 2;
    const auto p = run("poisson", c);
    EXPECT_EQ(p.code, cli::kOk);
    EXPECT_NE(p.out.find("err_l2="), std::string::npos);
    const auto u = run("uc", c);
    EXPECT_EQ(u.code, cli::kOk);
    EXPECT_NE(u.out.find("n_dofs_primal=337"), std::string::npos);
    c.hmin = HminPolicy::Value;
    c.hmin_value = 0.5;
    EXPECT_NE(run("uc", c).out.find("tikhonov_scale=5.000000000000e-01"), std::string::npos);
}

TEST(Cli, StudyWritesReportsAndEchoesConfig) {
    const auto dir = scratch_dir("study");
    RunConfig c;
    c.levels = {1, 2, 3};
    c.rate_window = {1, 3};
    const auto r = run("converge", c, {dir, false});
    EXPECT_EQ(r.code, cli::kOk);
    EXPECT_NE(r.out.find("check err_l2_B_rate"), std::string::npos);
    ASSERT_TRUE(fs::exists(dir / "converge.csv"));
    std::ifstream f(dir / "converge.json");
    const auto doc = nlohmann::json::parse(f);
    EXPECT_EQ(parse_config(analysis::config_text_from_json(doc)), c);

    // Bit-identical reruns.
    std::ifstream a(dir / "converge.csv");
    const std::string first((std::istreambuf_iterator<char>(a)), {});
    run("converge", c, {dir, false});
    std::ifstream b(dir / "converge.csv");
    EXPECT_EQ(first, std::string((std::istreambuf_iterator<char>(b)), {}));
}

TEST(Cli, StrictModeReportsFailedChecks) {
    const auto dir = scratch_dir("strict");
    RunConfig c;
    c.levels = {1, 2};
    c.rate_window = {1, 2};
    c.perturbation.epsilon = 1e-3;
    c.hmin = HminPolicy::Auto;
    // No level reaches the tiny automatic h_min, so the blow-up check cannot pass.
    EXPECT_EQ(run("stagnate", c, {dir, true}).code, cli::kCheckFailed);
    EXPECT_EQ(run("stagnate", c, {dir, false}).code, cli::kOk);
}

TEST(Cli, ExitCodes) {
    RunConfig bad;
    bad.geometry.r2 = 2.0;
    const auto r = run("alpha", bad);
    EXPECT_EQ(r.code, cli::kConfig);
    EXPECT_EQ(r.err, "error[config]: geometry: r2 < r3 violated\n");
    EXPECT_EQ(run("nope", RunConfig{}).code, cli::kConfig);
    RunConfig stag;
    EXPECT_EQ(run("stagnate", stag).code, cli::kConfig);
    RunConfig g3;
    g3.geometry.dim = 3;
    EXPECT_EQ(run("uc", g3).code, cli::kConfig);
    EXPECT_EQ(run("three-ball", g3).code, cli::kOk);
}

TEST(Cli, SelftestPasses) {
    const auto r = run("selftest", RunConfig{});
    EXPECT_EQ(r.code, cli::kOk) << r.out;
    EXPECT_NE(r.out.find("invariants: 14 passed, 0 failed"), std::string::npos) << r.out;
}

TEST(Cli, ShortestFormatting) {
    EXPECT_EQ(cli::shortest(1.0), "1.0");
    EXPECT_EQ(cli::shortest(0.5), "0.5");
    EXPECT_EQ(cli::shortest(1e-20), "1e-20");
    EXPECT_EQ(cli::shortest(0.1), "0.1");
}

}  // namespace
}  // namespace ucfem
