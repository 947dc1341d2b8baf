#include "oracles.hpp"

#include <gradflow/runner.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace gradflow;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing: sections, scalars, arrays, comments") {
    auto t = ConfigTable::parse(R"(
# experiment
[equation]
family = "porous_medium"   # inline comment
p = 3
[initial]
coeffs = [1.0, 0.5, 0.25]
kind = "modes"
[output]
full_state = true
)");
    CHECK(t.text("equation.family", "") == "porous_medium");
    CHECK(t.number("equation.p", 0) == 3.0);
    CHECK(t.numbers("initial.coeffs") == std::vector<double>{1.0, 0.5, 0.25});
    CHECK(t.boolean("output.full_state", false));
    CHECK(t.number("missing.key", 7.5) == 7.5);
    CHECK_THROWS_AS(t.number("equation.family", 0), ConfigError);
}

TEST_CASE("config parsing rejects malformed lines") {
    CHECK_THROWS_AS(ConfigTable::parse("[unterminated\n"), ConfigError);
    CHECK_THROWS_AS(ConfigTable::parse("just a token\n"), ConfigError);
    CHECK_THROWS_AS(ConfigTable::parse("x = \n"), ConfigError);
    CHECK_THROWS_AS(ConfigTable::parse("x = 12abc\n"), ConfigError);
    CHECK_THROWS_AS(ConfigTable::parse("x = \"open\n"), ConfigError);
}

TEST_CASE("dotted overrides replace values") {
    auto t = ConfigTable::parse("[scheme]\ndt = 0.1\n");
    t.set_override("scheme.dt=0.01");
    t.set_override("basis.n_modes=8");
    CHECK(t.number("scheme.dt", 0) == 0.01);
    CHECK(t.integer("basis.n_modes", 0) == 8);
    CHECK_THROWS_AS(t.set_override("no_equals_sign"), ConfigError);
}

TEST_CASE("canonical dump and fingerprint ignore declaration order") {
    auto t1 = ConfigTable::parse("[a]\nx = 1\n[b]\ny = 2\n");
    auto t2 = ConfigTable::parse("[b]\ny = 2\n[a]\nx = 1\n");
    CHECK(t1.canonical() == t2.canonical());
    CHECK(t1.fingerprint() == t2.fingerprint());
    CHECK(t1.fingerprint() != ConfigTable::parse("[a]\nx = 2\n").fingerprint());
}

TEST_CASE("experiment validation aggregates every violation") {
    auto t = ConfigTable::parse(R"(
[equation]
family = "no_such_family"
[basis]
n_modes = -3
[scheme]
dt = -0.5
)");
    try {
        ExperimentConfig::from_table(t);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems.size() >= 3);
    }
}

TEST_CASE("validation enforces family parameter ranges and Phi(0) = 0") {
    CHECK_THROWS_AS(ExperimentConfig::from_table(ConfigTable::parse(
                        "[equation]\nfamily = \"porous_medium\"\np = 0.5\n")),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_table(ConfigTable::parse(
                        "[equation]\nfamily = \"p_laplace\"\nm = 1.0\n")),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_table(ConfigTable::parse(
                        "[equation]\nphi_zero_offset = 0.3\n")),
                    ConfigError);
}

TEST_CASE("validation checks the noise summability preset") {
    const std::string base = R"(
[equation]
family = "porous_medium"
p = 2
[noise]
preset = "multiplicative_powerlaw"
K = 16
amplitude = 0.5
)";
    CHECK_THROWS_AS(ExperimentConfig::from_table(ConfigTable::parse(base + "decay = 0.5\n")),
                    ConfigError);
    CHECK_NOTHROW(ExperimentConfig::from_table(ConfigTable::parse(base + "decay = 8.0\n")));
}

TEST_CASE("validation rejects dt outside the quasi-convexity window") {
    auto t = ConfigTable::parse(R"(
[equation]
family = "reaction_diffusion"
reaction = "allen_cahn"
[scheme]
dt = 2.0
t_end = 2.0
)");
    CHECK_THROWS_AS(ExperimentConfig::from_table(t), ConfigError);
}

TEST_CASE("experiment factories build consistent objects") {
    auto cfg = ExperimentConfig::from_table(ConfigTable::parse(R"(
[equation]
family = "reaction_diffusion"
[basis]
n_modes = 6
[noise]
preset = "additive_powerlaw"
K = 3
amplitude = 0.2
decay = 1.5
[initial]
kind = "powerlaw"
alpha = 0.6
fine_modes = 12
)"));
    SpectralBasis basis = cfg.make_basis();
    CHECK(basis.n_modes() == 6);
    CHECK(basis.n_quad() == 24);
    NoiseOperator B = cfg.make_noise(basis);
    CHECK(B.kind() == NoiseKind::Additive);
    CHECK(B.modes() == 3);
    SpectralBasis fine = cfg.make_fine_basis();
    CHECK(fine.n_modes() == 12);
    Field x0 = cfg.make_initial(fine);
    CHECK(x0.coeffs()[0] == Catch::Approx(1.0));
    CHECK(x0.coeffs()[1] == Catch::Approx(-std::pow(2.0, -0.6)));
}

TEST_CASE("simulate writes a manifest and one CSV per path") {
    TempDir dir("gradflow_test_sim");
    auto cfg = ExperimentConfig::from_table(ConfigTable::parse(R"(
[equation]
family = "reaction_diffusion"
[basis]
n_modes = 4
[scheme]
dt = 0.01
t_end = 0.0
[simulate]
n_paths = 2
)"));
    cmd_simulate(cfg, dir.path.string());
    CHECK(fs::exists(dir.path / "manifest.json"));
    CHECK(fs::exists(dir.path / "path_0000.csv"));
    CHECK(fs::exists(dir.path / "path_0001.csv"));
    const std::string csv = read_file(dir.path / "path_0000.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + t = 0 row
    const std::string manifest = read_file(dir.path / "manifest.json");
    CHECK(manifest.find("content_hash") != std::string::npos);
}

TEST_CASE("same config and seed give byte-identical data files") {
    const std::string conf = R"(
[equation]
family = "reaction_diffusion"
[basis]
n_modes = 4
[noise]
preset = "additive_powerlaw"
K = 2
amplitude = 0.3
decay = 1.0
[scheme]
dt = 0.001
t_end = 0.01
[output]
full_state = true
)";
    TempDir d1("gradflow_det_1"), d2("gradflow_det_2");
    auto cfg1 = ExperimentConfig::from_table(ConfigTable::parse(conf));
    auto cfg2 = ExperimentConfig::from_table(ConfigTable::parse(conf));
    cfg1.workers = 1;
    cfg2.workers = 3;
    cmd_simulate(cfg1, d1.path.string());
    cmd_simulate(cfg2, d2.path.string());
    CHECK(read_file(d1.path / "path_0000.csv") == read_file(d2.path / "path_0000.csv"));
}

TEST_CASE("check emits one report per assumption") {
    TempDir dir("gradflow_test_check");
    auto cfg = ExperimentConfig::from_table(ConfigTable::parse(R"(
[equation]
family = "porous_medium"
p = 2
[basis]
n_modes = 4
[initial]
kind = "powerlaw"
fine_modes = 16
[check]
samples = 10
)"));
    cmd_check(cfg, dir.path.string());
    for (const char* name : {"assumption_a1.json", "assumption_a2.json", "assumption_a3.json",
                             "assumption_a4.json", "assumption_a4prime.json",
                             "assumption_a5.json", "assumption_a6.json",
                             "projection_study.csv"})
        CHECK(fs::exists(dir.path / name));
    const std::string a1 = read_file(dir.path / "assumption_a1.json");
    CHECK(a1.find("\"ok\": true") != std::string::npos);
    const std::string a3 = read_file(dir.path / "assumption_a3.json");
    CHECK(a3.find("\"ok\": true") != std::string::npos);
}

TEST_CASE("estimate dispatches the selected estimators") {
    TempDir dir("gradflow_test_est");
    auto cfg = ExperimentConfig::from_table(ConfigTable::parse(R"(
[equation]
family = "reaction_diffusion"
[basis]
n_modes = 4
[noise]
preset = "additive_powerlaw"
K = 1
amplitude = 0.3
decay = 1.0
[scheme]
dt = 0.001
t_end = 0.05
[estimate]
names = "ou_exact"
n_paths = 200
)"));
    cmd_estimate(cfg, dir.path.string());
    CHECK(fs::exists(dir.path / "ou_exact.json"));
    const std::string rep = read_file(dir.path / "ou_exact.txt");
    CHECK(rep.find("bounded") != std::string::npos);
}

TEST_CASE("output directory resolution prefers the environment variable") {
    auto cfg = ExperimentConfig::from_table(ConfigTable::parse("[output]\ndir = \"cfg_dir\"\n"));
    CHECK(resolve_out_dir(cfg, "") == "cfg_dir");
    CHECK(resolve_out_dir(cfg, "flag_dir") == "flag_dir");
    setenv("GRADFLOW_OUT", "env_dir", 1);
    CHECK(resolve_out_dir(cfg, "flag_dir") == "env_dir");
    unsetenv("GRADFLOW_OUT");
}

TEST_CASE("unknown estimator names are rejected") {
    CHECK_THROWS_AS(ExperimentConfig::from_table(
                        ConfigTable::parse("[estimate]\nnames = \"no_such_estimator\"\n")),
                    ConfigError);
}
