#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "iobs/error.hpp"
#include "iobs/experiments.hpp"
#include "iobs/report.hpp"
#include "oracles.hpp"

using namespace iobs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep))
        out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("gains survive a text round trip exactly") {
    std::mt19937_64 rng(12);
    const DirectObserverGains d{oracle::uniform(rng, 3, 2, -1, 1), oracle::uniform(rng, 3, 2, -1, 1),
                                oracle::uniform(rng, 3, 3, 0, 1), oracle::uniform(rng, 3, 3, 0, 1)};
    const auto back = std::get<DirectObserverGains>(gains_from_json(nlohmann::json::parse(gains_to_json(d).dump())));
    CHECK(back.L == d.L);
    CHECK(back.K == d.K);
    CHECK(back.F == d.F);
    CHECK(back.G == d.G);

    const auto t = pendulum_reference_gains();
    const auto tb =
        std::get<TransformedObserverGains>(gains_from_json(nlohmann::json::parse(gains_to_json(t).dump())));
    CHECK(tb.Lambda == t.Lambda);
    CHECK(tb.S == t.S);
    CHECK(tb.U == t.U);
    CHECK(tb.H == t.H);

    CHECK_THROWS_AS((void)gains_from_json({{"frame", "sideways"}}), ParseError);
    CHECK_THROWS_AS((void)gains_from_json({{"frame", "direct"}}), ParseError);
}

TEST_CASE("synthesis reports") {
    const SystemModel model = pendulum_model(0.065);
    const auto infeasible = synthesis_report(grid_synthesize(model, SynthesisGrid::defaults()), "direct");
    CHECK(infeasible.at("status") == "infeasible");
    CHECK(infeasible.at("mode") == "direct");
    CHECK_FALSE(infeasible.contains("gains"));
    CHECK(infeasible.at("diagnostic").at("direct_infeasible") == true);
    CHECK(infeasible.at("diagnostic").at("flagged")[0].at("index") == 2);
    CHECK(infeasible.at("diagnostic").at("flagged")[0].at("value") == 1.0);

    const auto result =
        grid_synthesize(model, SynthesisGrid::defaults(), TransformedSynthesis{pendulum_lambda(), pendulum_reference_S()});
    REQUIRE(result.found());
    const auto report = synthesis_report(result, "transformed");
    CHECK(report.at("status") == "feasible");
    CHECK(report.at("grid").at("solved").get<int>() > 0);
    CHECK(report.at("gains").at("frame") == "transformed");
    for (const auto& key : {"tau", "lambda", "variables", "residuals", "post_checks", "transform"})
        CHECK_MESSAGE(report.at("certificate").contains(key), key);

    // The certificate read back from text verifies against the model.
    const auto text = report.dump();
    const auto doc = nlohmann::json::parse(text);
    const Certificate cert = certificate_from_json(doc.at("certificate"));
    const ObserverGains gains = gains_from_json(doc.at("gains"));
    CHECK(cert.variables.P == result.certificate->variables.P);
    CHECK(cert.tau == result.certificate->tau);
    CHECK(cert.lambda == result.certificate->lambda);
    REQUIRE(cert.transformed());
    CHECK(cert.transform->S == pendulum_reference_S());
    CHECK(verify_certificate(model, gains, cert).all_ok());
}

TEST_CASE("trace CSV layout") {
    PendulumOptions options;
    options.horizon = 20;
    options.x0 = Eigen::Vector2d(0.5, 0.3);
    const auto run = run_pendulum(options);
    std::ostringstream csv;
    write_trace_csv(run.trace, csv);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "k,x_1,x_2,xbar_1,xbar_2,xlow_1,xlow_2,min_error,positivity_ok,dqc,dqc_ok,lyapunov_excess,lyapunov_ok,"
          "defect,defect_ok");
    const auto columns = split(header).size();
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        const auto cells = split(line);
        CHECK(cells.size() == columns);
        CHECK(std::stoi(cells[0]) == rows);
        const double x1 = std::stod(cells[1]);
        CHECK(std::stod(cells[5]) <= x1);
        CHECK(x1 <= std::stod(cells[3]));
        ++rows;
    }
    CHECK(rows == 21);

    std::ostringstream plot;
    write_plot_csv(run.trace, 0.065, plot);
    std::istringstream plot_lines(plot.str());
    std::getline(plot_lines, header);
    CHECK(header == "t,x_1,xbar_1,xlow_1,x_2,xbar_2,xlow_2");
    std::getline(plot_lines, line);
    std::getline(plot_lines, line);
    CHECK(std::stod(split(line)[0]) == doctest::Approx(0.065));

    const auto summary = trace_summary(run.trace);
    CHECK(summary.at("records") == 21);
    CHECK(summary.at("violations").at("positivity") == 0);
    CHECK(summary.at("valid") == true);
    CHECK(summary.at("defect_bound").get<double>() == doctest::Approx(std::sqrt(2.0) * 0.065 * 0.065));
}

TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "iobs_report_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "doc.json").string();
    const nlohmann::json doc = {{"a", 0.1}, {"b", {1, 2, 3}}};
    write_json_file(doc, path);
    CHECK(read_json_file(path) == doc);
    write_text_file("{ not json", path);
    CHECK_THROWS_AS((void)read_json_file(path), ParseError);
    CHECK_THROWS_AS((void)read_json_file((dir / "missing.json").string()), ParseError);
    CHECK_THROWS_AS(write_text_file("x", (dir / "no_dir" / "x.txt").string()), Error);
}
