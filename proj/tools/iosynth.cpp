// iosynth: interval-observer synthesis and simulation from the command line.
//
// Exit status: 0 success / feasible, 2 infeasible, 3 input error,
// 4 numerical failure (including an invalidated sampled-data run).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "iobs/error.hpp"
#include "iobs/experiments.hpp"
#include "iobs/json_eigen.hpp"
#include "iobs/model.hpp"
#include "iobs/observer.hpp"
#include "iobs/report.hpp"
#include "iobs/synthesis.hpp"
#include "iobs/transform.hpp"

namespace fs = std::filesystem;
using namespace iobs;

namespace {

enum Exit { kOk = 0, kInfeasible = 2, kInputError = 3, kNumerical = 4 };

struct CommonFlags {
    std::vector<double> tau;
    std::vector<double> lambda;
    double eps_pos = Margins{}.eps_pos;
    std::uint64_t seed = 1;
    int horizon = 1000;
    std::string out;

    void attach(CLI::App* app, const std::string& out_help) {
        app->add_option("--tau-grid", tau, "comma-separated tau values (default 1e-3,...,1e3)")->delimiter(',');
        app->add_option("--lambda-grid", lambda, "comma-separated lambda values (default 0.05,...,0.95)")
            ->delimiter(',');
        app->add_option("--eps-pos", eps_pos, "strict-positivity margin")->capture_default_str();
        app->add_option("--seed", seed, "disturbance / initial-state seed")->capture_default_str();
        app->add_option("--horizon", horizon, "simulation horizon in steps")->capture_default_str();
        app->add_option("--out", out, out_help);
    }

    [[nodiscard]] SynthesisGrid grid(SynthesisGrid g = SynthesisGrid::defaults()) const {
        if (!tau.empty())
            g.tau = tau;
        if (!lambda.empty())
            g.lambda = lambda;
        return g;
    }

    [[nodiscard]] SynthesisOptions synthesis() const {
        SynthesisOptions o;
        o.margins.eps_pos = eps_pos;
        return o;
    }
};

int status_exit(const SynthesisResult& r) {
    if (r.found())
        return kOk;
    return r.status() == "numerical_failure" ? kNumerical : kInfeasible;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void emit_json(const nlohmann::json& doc, const std::string& path) {
    if (path.empty())
        std::cout << doc.dump(2) << '\n';
    else
        write_json_file(doc, path);
}

std::string render(const std::function<void(std::ostream&)>& f) {
    std::ostringstream s;
    f(s);
    return s.str();
}

int cmd_synthesize(const CommonFlags& flags, const std::string& model_path, const std::string& mode,
                   bool auto_transform, bool no_injection) {
    const SystemModel model = load_model(model_path);
    SynthesisOptions options = flags.synthesis();
    options.injection_allowed = !no_injection;
    SynthesisMode synthesis_mode = DirectSynthesis{};
    if (mode == "transformed") {
        if (!model.lambda_hint)
            throw ParseError("transformed mode needs 'Lambda' in the model file");
        if (model.s_hint) {
            synthesis_mode = TransformedSynthesis{*model.lambda_hint, *model.s_hint};
        } else if (auto_transform) {
            const TransformPair t = build_transform(model.A(), model.C(), *model.lambda_hint);
            synthesis_mode = TransformedSynthesis{t.Lambda, t.S};
        } else {
            throw ParseError("transformed mode needs 'S' in the model file or --auto-transform");
        }
    }
    const SynthesisResult result = grid_synthesize(model, flags.grid(), synthesis_mode, options);
    const nlohmann::json report = synthesis_report(result, mode);
    emit_json(report, flags.out);
    std::cerr << "synthesis: " << result.status() << " (" << result.stats.solved << " solves)\n";
    if (result.diagnostic && result.diagnostic->direct_infeasible())
        std::cerr << result.diagnostic->describe() << '\n';
    return status_exit(result);
}

int cmd_table1(const CommonFlags& flags, double width) {
    Table1Options options;
    options.grid = flags.grid();
    options.synthesis = flags.synthesis();
    options.width = width;
    const auto cells = run_table1(options);
    const nlohmann::json doc = table1_json(cells);

    std::ostringstream table;
    table << std::fixed << std::setprecision(4);
    int failed = 0;
    for (bool injection : {false, true}) {
        table << (injection ? "K free" : "K = 0 ");
        for (const auto& c : cells) {
            if (c.injection != injection)
                continue;
            if (c.result) {
                table << "  " << c.result->alpha;
            } else {
                table << "  failed";
                ++failed;
            }
        }
        table << '\n';
    }
    std::cout << table.str();
    for (const auto& c : cells) {
        std::cerr << "cell D~=[" << c.dtilde(0, 0) << ',' << c.dtilde(0, 1) << ';' << c.dtilde(1, 0) << ','
                  << c.dtilde(1, 1) << "] " << (c.injection ? "K free" : "K=0") << ": ";
        if (c.result)
            std::cerr << c.result->alpha << " in " << c.result->stats.solved << " solves, " << c.seconds << " s\n";
        else
            std::cerr << "error: " << c.error << '\n';
    }
    if (!flags.out.empty())
        write_json_file(doc, flags.out);
    return failed ? kNumerical : kOk;
}

int cmd_pendulum(const CommonFlags& flags, double h, const std::vector<double>& x0, double radius,
                 bool auto_transform) {
    PendulumOptions options;
    options.h = h;
    options.horizon = flags.horizon;
    options.seed = flags.seed;
    options.initial_radius = radius;
    options.reference_transform = !auto_transform && h == 0.065;
    options.grid = flags.grid(pendulum_grid());
    options.synthesis = flags.synthesis();
    if (!x0.empty()) {
        if (x0.size() != 2)
            throw DimensionError("--x0 takes two values");
        options.x0 = to_vector(x0);
    }

    PendulumRun run;
    try {
        run = run_pendulum(options);
    } catch (const Error& e) {
        const std::string what = e.what();
        std::cerr << "pendulum: " << what << '\n';
        return what.rfind("synthesis:", 0) == 0 ? kInfeasible : kInputError;
    }
    const nlohmann::json summary = trace_summary(run.trace);
    const std::string dir = flags.out.empty() ? "." : flags.out;
    fs::create_directories(dir);
    write_json_file(synthesis_report(run.synthesis, "transformed"), dir + "/synthesis.json");
    write_text_file(render([&](std::ostream& s) { write_trace_csv(run.trace, s); }), dir + "/trace.csv");
    write_text_file(render([&](std::ostream& s) { write_plot_csv(run.trace, h, s); }), dir + "/plot.csv");
    write_json_file(summary, dir + "/summary.json");
    std::cout << summary.dump(2) << '\n';

    if (run.trace.defect_violations() > 0) {
        std::cerr << "pendulum: discretization error exceeded h*rho(h) on " << run.trace.defect_violations()
                  << " samples; run invalid\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_diagnose(const CommonFlags& flags, const std::string& model_path) {
    const SystemModel model = load_model(model_path);
    const DirectDiagnostic d = diagnose_direct(model.A(), model.C());
    nlohmann::json flagged = nlohmann::json::array();
    for (const auto& f : d.flagged)
        flagged.push_back({{"index", f.index + 1}, {"value", f.value}});
    nlohmann::json doc = {{"direct_infeasible", d.direct_infeasible()}, {"flagged", flagged}, {"message", d.describe()}};
    if (model.lambda_hint && model.s_hint) {
        const Assumption3Report a = check_assumption3(model.A(), model.C(), *model.lambda_hint, *model.s_hint);
        doc["transform"] = {{"holds", a.holds}, {"spectral_radius", a.spectral_radius}, {"reason", a.reason}};
    }
    emit_json(doc, flags.out);
    return kOk;
}

int cmd_simulate(const CommonFlags& flags, const std::string& model_path, const std::string& report_path,
                 const std::vector<double>& x0_in, double radius, int seeds) {
    const SystemModel model = load_model(model_path);
    const nlohmann::json report = read_json_file(report_path);
    if (!report.contains("gains"))
        throw ParseError("report '" + report_path + "' holds no gains");
    const ObserverGains gains = gains_from_json(report.at("gains"));
    validate_gains(gains, model);

    SimulationOptions sim;
    if (report.contains("certificate")) {
        Certificate cert = certificate_from_json(report.at("certificate"));
        if (cert.variables.P.rows() != 2 * model.n())
            throw DimensionError("certificate does not match the model dimension");
        sim.certificate = monitor_certificate(model, cert);
    }
    const Eigen::VectorXd x0 = x0_in.empty() ? Eigen::VectorXd::Zero(model.n()) : to_vector(x0_in);
    if (x0.size() != model.n())
        throw DimensionError("--x0 must have n entries");
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(model.n(), radius);

    const std::string dir = flags.out.empty() ? "." : flags.out;
    fs::create_directories(dir);
    int violations = 0;
    for (int i = 0; i < seeds; ++i) {
        sim.seed = flags.seed + static_cast<std::uint64_t>(i);
        const ObserverTrace trace = simulate(model, gains, x0, x0 + r, x0 - r, flags.horizon, sim);
        const std::string stem = dir + "/trace_" + std::to_string(sim.seed);
        write_text_file(render([&](std::ostream& s) { write_trace_csv(trace, s); }), stem + ".csv");
        write_json_file(trace_summary(trace), stem + ".json");
        violations += trace.positivity_violations() + trace.dqc_violations() + trace.lyapunov_violations();
    }
    std::cerr << "simulate: " << seeds << " runs, " << violations << " monitor violations\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interval observer synthesis and simulation"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string model_path, report_path, mode = "direct";
    bool auto_transform = false, no_injection = false;
    double width = 5e-3, h = 0.065, radius = 0.2;
    std::vector<double> x0;
    int seeds = 1;

    auto* synth = app.add_subcommand("synthesize", "synthesize an observer for a model file");
    flags.attach(synth, "report path (stdout if absent)");
    synth->add_option("model", model_path, "model JSON")->required();
    synth->add_option("--mode", mode, "direct | transformed")
        ->check(CLI::IsMember({"direct", "transformed"}))
        ->capture_default_str();
    synth->add_flag("--auto-transform", auto_transform, "build S from the eigenvectors of A - Lambda C");
    synth->add_flag("--no-injection", no_injection, "fix the injection gain to zero");

    auto* table = app.add_subcommand("table1", "maximum Jacobian scale for the six coupling patterns");
    flags.attach(table, "table JSON path");
    table->add_option("--width", width, "bisection width")->capture_default_str();

    auto* pend = app.add_subcommand("pendulum", "sampled-data pendulum: transform, synthesize, simulate");
    flags.attach(pend, "output directory (default .)");
    pend->add_option("--period", h, "sampling period h in seconds")->capture_default_str();
    pend->add_option("--x0", x0, "initial state (drawn by seed if absent)")->delimiter(',');
    pend->add_option("--radius", radius, "initial bound half-width")->capture_default_str();
    pend->add_flag("--auto-transform", auto_transform, "eigenvector transformation even at h = 0.065");

    auto* diag = app.add_subcommand("diagnose", "structural test for observers in plant coordinates");
    flags.attach(diag, "diagnostic JSON path (stdout if absent)");
    diag->add_option("model", model_path, "model JSON")->required();

    auto* sim = app.add_subcommand("simulate", "simulate a synthesized observer");
    flags.attach(sim, "output directory (default .)");
    sim->add_option("model", model_path, "model JSON")->required();
    sim->add_option("--report", report_path, "synthesis report JSON")->required();
    sim->add_option("--x0", x0, "initial state (default 0)")->delimiter(',');
    sim->add_option("--radius", radius, "initial bound half-width")->capture_default_str();
    sim->add_option("--seeds", seeds, "number of consecutive seeds")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*synth)
            return cmd_synthesize(flags, model_path, mode, auto_transform, no_injection);
        if (*table)
            return cmd_table1(flags, width);
        if (*pend)
            return cmd_pendulum(flags, h, x0, radius, auto_transform);
        if (*diag)
            return cmd_diagnose(flags, model_path);
        if (*sim)
            return cmd_simulate(flags, model_path, report_path, x0, radius, seeds);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}
