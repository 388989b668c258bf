#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = IOBS_CLI_PATH;
const std::string kModels = IOBS_MODELS_DIR;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "iobs_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string command = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json load(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

std::string shell_arg(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("synthesize: direct mode on the pendulum is infeasible") {
    const auto dir = scratch("direct");
    const auto report = dir / "report.json";
    CHECK(run("synthesize " + shell_arg(kModels + "/pendulum.json") + " --mode direct --out " + shell_arg(report)) == 2);
    const auto doc = load(report);
    CHECK(doc.at("status") == "infeasible");
    CHECK(doc.at("diagnostic").at("flagged")[0].at("index") == 2);
}

TEST_CASE("synthesize: transformed mode on the pendulum is feasible") {
    const auto dir = scratch("transformed");
    const auto report = dir / "report.json";
    CHECK(run("synthesize " + shell_arg(kModels + "/pendulum.json") + " --mode transformed --out " + shell_arg(report)) ==
          0);
    const auto doc = load(report);
    CHECK(doc.at("status") == "feasible");
    CHECK(doc.at("gains").at("frame") == "transformed");

    // The contraction rate of the pendulum needs lambda above 0.9.
    CHECK(run("synthesize " + shell_arg(kModels + "/pendulum.json") +
              " --mode transformed --lambda-grid 0.3,0.5 --out " + shell_arg(dir / "low.json")) == 2);
}

TEST_CASE("synthesize: transformation from the eigenvectors") {
    const auto dir = scratch("auto");
    auto doc = load(kModels + "/pendulum.json");
    doc.erase("S");
    std::ofstream(dir / "no_s.json") << doc.dump();
    CHECK(run("synthesize " + shell_arg(dir / "no_s.json") + " --mode transformed --out " + shell_arg(dir / "r.json")) ==
          3);
    CHECK(run("synthesize " + shell_arg(dir / "no_s.json") + " --mode transformed --auto-transform --out " +
              shell_arg(dir / "r.json")) == 0);
}

TEST_CASE("input errors exit with status 3") {
    const auto dir = scratch("errors");
    std::ofstream(dir / "broken.json") << "{ \"n\": 2, \"A\": [[1, 0], ";
    CHECK(run("synthesize " + shell_arg(dir / "broken.json")) == 3);
    CHECK(run("synthesize " + shell_arg(dir / "absent.json")) == 3);
    CHECK(run("synthesize " + shell_arg(kModels + "/pendulum.json") + " --mode sideways") == 3);
    CHECK(run("synthesize " + shell_arg(kModels + "/pendulum.json") + " --lambda-grid 1.5") == 3);
    CHECK(run("no-such-command") == 3);
}

TEST_CASE("diagnose flags the velocity state") {
    const auto dir = scratch("diagnose");
    CHECK(run("diagnose " + shell_arg(kModels + "/pendulum.json") + " --out " + shell_arg(dir / "d.json")) == 0);
    const auto doc = load(dir / "d.json");
    CHECK(doc.at("direct_infeasible") == true);
    REQUIRE(doc.at("flagged").size() == 1);
    CHECK(doc.at("flagged")[0].at("index") == 2);
    CHECK(doc.at("flagged")[0].at("value") == 1.0);
    CHECK(doc.at("transform").at("holds") == true);
}

TEST_CASE("simulate: seeded traces are deterministic") {
    const auto dir = scratch("simulate");
    const std::string model = shell_arg(kModels + "/coupled_sin.json");
    REQUIRE(run("synthesize " + model + " --out " + shell_arg(dir / "report.json")) == 0);
    const std::string common = "simulate " + model + " --report " + shell_arg(dir / "report.json") +
                               " --x0 0.3,0.1 --radius 0.2 --horizon 200 --seeds 10 --seed 5 --out ";
    REQUIRE(run(common + shell_arg(dir / "a")) == 0);
    REQUIRE(run(common + shell_arg(dir / "b")) == 0);
    int files = 0;
    for (int seed = 5; seed < 15; ++seed) {
        const std::string name = "trace_" + std::to_string(seed);
        REQUIRE(fs::exists(dir / "a" / (name + ".csv")));
        CHECK(slurp(dir / "a" / (name + ".csv")) == slurp(dir / "b" / (name + ".csv")));
        CHECK(slurp(dir / "a" / (name + ".json")) == slurp(dir / "b" / (name + ".json")));
        const auto summary = load(dir / "a" / (name + ".json"));
        CHECK(summary.at("seed") == seed);
        CHECK(summary.at("violations").at("positivity") == 0);
        CHECK(summary.at("violations").at("dqc") == 0);
        CHECK(summary.at("violations").at("lyapunov") == 0);
        ++files;
    }
    CHECK(files == 10);
    CHECK(std::distance(fs::directory_iterator(dir / "a"), fs::directory_iterator{}) == 20);
    CHECK(slurp(dir / "a" / "trace_5.csv") != slurp(dir / "a" / "trace_6.csv"));
}

TEST_CASE("simulate: gains of the wrong dimension are rejected") {
    const auto dir = scratch("mismatch");
    REQUIRE(run("synthesize " + shell_arg(kModels + "/coupled_sin.json") + " --out " + shell_arg(dir / "report.json")) ==
            0);
    const nlohmann::json scalar = {{"n", 1},
                                   {"m", 1},
                                   {"A", {{0.5}}},
                                   {"C", {{1.0}}},
                                   {"D_lo", {{0.0}}},
                                   {"D_hi", {{0.0}}},
                                   {"w_lo", {0.0}},
                                   {"w_hi", {0.0}},
                                   {"nonlinearity", {{"name", "zero"}, {"params", nlohmann::json::array()}}}};
    std::ofstream(dir / "scalar.json") << scalar.dump();
    CHECK(run("simulate " + shell_arg(dir / "scalar.json") + " --report " + shell_arg(dir / "report.json") + " --out " +
              shell_arg(dir / "out")) == 3);
}

TEST_CASE("pendulum command writes byte-identical outputs") {
    const auto dir = scratch("pendulum");
    const std::string args = "pendulum --x0 0.5,0.3 --horizon 300 --out ";
    REQUIRE(run(args + shell_arg(dir / "a")) == 0);
    REQUIRE(run(args + shell_arg(dir / "b")) == 0);
    for (const auto* name : {"synthesis.json", "trace.csv", "plot.csv", "summary.json"}) {
        REQUIRE(fs::exists(dir / "a" / name));
        CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
    }
    const auto summary = load(dir / "a" / "summary.json");
    CHECK(summary.at("valid") == true);
    CHECK(summary.at("violations").at("positivity") == 0);
}
