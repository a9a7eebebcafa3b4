#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_path() { return OBSLAB_CLI_PATH; }
std::string config_dir() { return OBSLAB_CONFIG_DIR; }

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("obslab_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("verify-kernels produces a passing report with artifacts") {
    const fs::path out = fresh_dir("kernels");
    const int rc = run("verify-kernels --config " + config_dir() + "/verify-kernels.json" +
                       " --seed 1 --out " + out.string() + " --quiet");
    CHECK(rc == 0);
    REQUIRE(fs::exists(out / "verify-kernels-report.json"));
    REQUIRE(fs::exists(out / "verify-kernels-cells.csv"));

    const auto rep = nlohmann::json::parse(slurp(out / "verify-kernels-report.json"));
    CHECK(rep.at("failures").empty());
    CHECK(rep.at("seed").get<std::uint64_t>() == 1);
    bool found_l1 = false;
    for (const auto& c : rep.at("checks")) {
        CHECK(c.contains("value"));
        CHECK(c.contains("tolerance"));
        CHECK(c.contains("pass"));
        const std::string name = c.at("name").get<std::string>();
        if (name.rfind("gw_kernel_l1", 0) == 0) {
            found_l1 = true;
            CHECK(std::abs(c.at("value").get<double>() - 1.0) <= 1e-6);
        }
    }
    CHECK(found_l1);
}

TEST_CASE("duality-check scalar benchmark passes") {
    const fs::path out = fresh_dir("duality");
    const int rc = run("duality-check --config " + config_dir() + "/duality-check-scalar.json" +
                       " --seed 5 --out " + out.string() + " --quiet");
    CHECK(rc == 0);
    const auto rep = nlohmann::json::parse(slurp(out / "duality-check-report.json"));
    CHECK(rep.at("results").at("duality").at("relative_gap").get<double>() <= 0.02);
}

TEST_CASE("invalid configuration exits with code 2") {
    const fs::path out = fresh_dir("badcfg");
    const fs::path cfg = out / "bad.json";
    {
        std::ofstream os(cfg);
        os << "{\"grid\": {\"d\": 1}}\n";
    }
    CHECK(run("verify-kernels --config " + cfg.string() + " --seed 1 --out " + out.string()) == 2);
    CHECK(run("verify-kernels --config " + (out / "missing.json").string() + " --seed 1") == 2);
}

TEST_CASE("numerical guard violations exit with code 3") {
    const fs::path out = fresh_dir("guard");
    const fs::path cfg = out / "nyquist.json";
    {
        std::ofstream os(cfg);
        // cutoff beyond the representable band
        os << R"({
          "grid": {"d": 1, "half_width": 12.0, "n_per_axis": 512},
          "semigroup": "gw",
          "lambdas": [100.0],
          "times": [0.1],
          "heldout_lambdas": [6.0],
          "heldout_times": [0.1],
          "corpus": {"kind": "band_limited", "lambda_max": 24.0, "count": 2},
          "min_r2": 0.99,
          "inflation": 1.1
        })";
    }
    CHECK(run("verify-diss --config " + cfg.string() + " --seed 1 --out " + out.string()) == 3);
}

TEST_CASE("failing assertions exit with code 1 and list failures") {
    const fs::path out = fresh_dir("fail");
    const fs::path cfg = out / "strict.json";
    {
        std::ofstream os(cfg);
        // an impossible tolerance makes the configured assertion fail
        os << R"({
          "grid": {"d": 1, "half_width": 12.0, "n_per_axis": 512},
          "gw_times": [0.5],
          "ou_times": [0.25],
          "l1_tolerance": 1e-18,
          "mehler_tolerance": 1e-8
        })";
    }
    CHECK(run("verify-kernels --config " + cfg.string() + " --seed 1 --out " + out.string() +
              " --quiet") == 1);
    const auto rep = nlohmann::json::parse(slurp(out / "verify-kernels-report.json"));
    CHECK(!rep.at("failures").empty());
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
    const fs::path out1 = fresh_dir("det1");
    const fs::path out2 = fresh_dir("det2");
    const std::string cfg = config_dir() + "/verify-up.json";
    CHECK(run("verify-up --config " + cfg + " --seed 42 --out " + out1.string() + " --quiet") == 0);
    CHECK(run("verify-up --config " + cfg + " --seed 42 --out " + out2.string() + " --quiet") == 0);
    CHECK(slurp(out1 / "verify-up-report.json") == slurp(out2 / "verify-up-report.json"));
    CHECK(slurp(out1 / "verify-up-cells.csv") == slurp(out2 / "verify-up-cells.csv"));

    // a different seed changes the corpus, hence the report
    const fs::path out3 = fresh_dir("det3");
    CHECK(run("verify-up --config " + cfg + " --seed 43 --out " + out3.string() + " --quiet") == 0);
    CHECK(slurp(out1 / "verify-up-report.json") != slurp(out3 / "verify-up-report.json"));
}
