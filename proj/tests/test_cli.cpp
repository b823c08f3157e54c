// Integration tests driving the CLI binary (path from SF_CLI_PATH).
#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string cli_path() {
    const char* p = std::getenv("SF_CLI_PATH");
    return p ? p : "";
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "sf_cli_tests";
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& sub, const json& config, const std::string& extra = "",
                  const std::string& env = "") {
    static int counter = 0;
    const auto dir = scratch_dir();
    const auto cfg = dir / ("config_" + std::to_string(++counter) + ".json");
    const auto out = dir / ("out_" + std::to_string(counter) + ".jsonl");
    {
        std::ofstream f(cfg);
        f << config.dump(2);
    }
    std::string cmd = env + " " + cli_path() + " " + sub + " --config " + cfg.string() +
                      " --out " + out.string() + " --quiet " + extra + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WEXITSTATUS(rc);
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    res.out = ss.str();
    return res;
}

std::vector<json> parse_jsonl(const std::string& text) {
    std::vector<json> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(json::parse(line));
    }
    return records;
}

}  // namespace

TEST_CASE("cli: condition subcommand") {
    REQUIRE_FALSE(cli_path().empty());
    const json cfg{{"law", {{"family", "stable"}, {"alpha", 1.0}, {"c", 1.0}}}, {"q", 2.0}};
    const auto res = run_cli("condition", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].at("verdict") == "LogConvex");
    CHECK(recs[0].contains("config_hash"));
    CHECK(recs[0].at("version") == "0.1.0");
}

TEST_CASE("cli: pball volume gives the unit disc") {
    const json cfg{{"body", {{"family", "euclidean"}, {"dim", 1}}}, {"p", 2.0}, {"n", 2}};
    const auto res = run_cli("pball", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].at("volume").get<double>() == Catch::Approx(3.14159265358979324).epsilon(1e-12));
}

TEST_CASE("cli: cube section grid") {
    const double s = 1.0 / std::sqrt(2.0);
    const json cfg{{"law", {{"family", "uniform_box"}, {"half_width", 0.5}}},
                   {"mode", "zero"},
                   {"ys", {{1.0, 0.0}, {s, s}}},
                   {"quad", {{"rel_tol", 3e-7}, {"tail_eps", 1e-9}}}};
    const auto res = run_cli("section", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].at("value").get<double>() == Catch::Approx(1.0).margin(1e-6));
    CHECK(recs[1].at("value").get<double>() == Catch::Approx(std::sqrt(2.0)).margin(2e-6));
}

TEST_CASE("cli: byte-identical reruns and thread invariance") {
    const json cfg{{"law", {{"family", "laplace"}, {"b", 1.0}}},
                   {"op", "moment"},
                   {"p", 1.0},
                   {"q", 2.0},
                   {"weights", {{0.5, 0.5}, {1.0, 0.0}}},
                   {"N", 40000},
                   {"seed", 20240601}};
    const auto a = run_cli("moments", cfg, "", "SCHUR_FOURIER_THREADS=1");
    const auto b = run_cli("moments", cfg, "", "SCHUR_FOURIER_THREADS=4");
    const auto c = run_cli("moments", cfg);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK_FALSE(a.out.empty());
}

TEST_CASE("cli: seed override changes the stream") {
    const json cfg{{"law", {{"family", "laplace"}, {"b", 1.0}}},
                   {"op", "moment"},
                   {"p", 1.0},
                   {"weights", {0.5, 0.5}},
                   {"N", 20000},
                   {"seed", 1}};
    const auto a = run_cli("moments", cfg);
    const auto b = run_cli("moments", cfg, "--seed 2");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out != b.out);
}

TEST_CASE("cli: csv export") {
    const json cfg{{"law", {{"family", "gaussian"}, {"dim", 1}, {"sigma", 1.0}}}, {"q", 2.0}};
    const auto res = run_cli("condition", cfg, "--format csv");
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("op,q,verdict") == 0);
    CHECK(res.out.find("Affine") != std::string::npos);
}

TEST_CASE("cli: schur-test on the bochner functional") {
    const json cfg{
        {"functional",
         {{"name", "bochner"},
          {"law", {{"family", "laplace"}, {"b", 1.0}}},
          {"nu", {{"atoms", {{{"w", 1.0}, {"s", 1.0}}, {{"w", 0.5}, {"s", 0.3}}}}}},
          {"q", 2.0}}},
        {"mode", "log-convex-midpoint"},
        {"n", 3},
        {"trials", 25},
        {"tol", 1e-9},
        {"seed", 7}};
    const auto res = run_cli("schur-test", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].at("ok").get<bool>());
    CHECK(recs[0].at("violations").get<int>() == 0);
}

TEST_CASE("cli: khinchin constants record") {
    const json cfg{{"law", {{"family", "laplace"}, {"b", 1.0}}}, {"p", 1.0}};
    const auto res = run_cli("khinchin", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].at("c_gauss").get<double>() ==
          Catch::Approx(std::sqrt(2.0 / 3.14159265358979324)).epsilon(1e-12));
    CHECK(recs[0].at("c_self").get<double>() ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cli: uniform-ball-moments pipeline") {
    const json cfg{{"body", {{"family", "euclidean"}, {"dim", 1}}},
                   {"p", 1.0},
                   {"n", 2},
                   {"l", 0.5},
                   {"weights", {{0.5, 0.5}, {1.0, 0.0}}},
                   {"N", 50000},
                   {"seed", 99}};
    const auto res = run_cli("uniform-ball-moments", cfg);
    REQUIRE(res.exit_code == 0);
    const auto recs = parse_jsonl(res.out);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs) {
        CHECK(r.at("estimate").get<double>() > 0.0);
        CHECK(r.at("stderr").get<double>() > 0.0);
    }
}

TEST_CASE("cli: exit codes") {
    SECTION("schema errors exit 2") {
        const json cfg{{"law", {{"family", "no_such_family"}}}, {"q", 2.0}};
        const auto res = run_cli("condition", cfg);
        CHECK(res.exit_code == 2);
    }
    SECTION("missing seed on a stochastic run is a schema error") {
        const json cfg{{"law", {{"family", "laplace"}, {"b", 1.0}}},
                       {"op", "moment"},
                       {"p", 1.0},
                       {"weights", {0.5, 0.5}},
                       {"N", 1000}};
        const auto res = run_cli("moments", cfg);
        CHECK(res.exit_code == 2);
    }
    SECTION("numerical domain errors exit 3 with an error record") {
        const json cfg{{"law", {{"family", "uniform_box"}, {"half_width", 0.5}}}, {"q", 2.0}};
        const auto res = run_cli("condition", cfg);
        CHECK(res.exit_code == 3);
        const auto recs = parse_jsonl(res.out);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].at("error").get<std::string>().find("non-positive") != std::string::npos);
    }
}
