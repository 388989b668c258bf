#include "iobs/experiments.hpp"

#include <chrono>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "iobs/error.hpp"
#include "iobs/json_eigen.hpp"

namespace iobs {

std::vector<Eigen::MatrixXd> table1_dtilde() {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& entries : std::vector<std::array<double, 4>>{
             {0, 1, 1, 0}, {1, 1, 1, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 1, 1}}) {
        Eigen::MatrixXd d(2, 2);
        d << entries[0], entries[1], entries[2], entries[3];
        out.push_back(d);
    }
    return out;
}

SystemModel table1_model(const Eigen::MatrixXd& dtilde, double alpha, double w_bound) {
    if (dtilde.rows() != 2 || dtilde.cols() != 2)
        throw DimensionError("D~ must be 2x2");
    if (alpha < 0.0 || (dtilde.array() < 0.0).any())
        throw ModelError("alpha and D~ must be nonnegative");
    Eigen::MatrixXd A(2, 2);
    A << 1, 0, 0, 0;
    Eigen::MatrixXd C(1, 2);
    C << 1, 0;
    const Eigen::MatrixXd B = alpha * dtilde;
    NonlinearitySpec spec{"coupled_sin", {B(0, 0), B(0, 1), B(1, 0), B(1, 1)}};
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(2, w_bound);
    return SystemModel(A, C, spec, -B, B, -w, w);
}

std::vector<Table1Cell> run_table1(const Table1Options& options) {
    std::vector<Table1Cell> cells;
    for (bool injection : {false, true}) {
        for (const auto& d : table1_dtilde()) {
            Table1Cell cell;
            cell.dtilde = d;
            cell.injection = injection;
            const auto start = std::chrono::steady_clock::now();
            try {
                cell.result = max_alpha([&](double alpha) { return table1_model(d, alpha); }, injection,
                                        {options.alpha_lo, options.alpha_hi}, options.grid, options.synthesis,
                                        options.width);
            } catch (const Error& e) {
                cell.error = e.what();
            }
            cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

nlohmann::json table1_json(const std::vector<Table1Cell>& cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json row = {{"dtilde", matrix_to_json(c.dtilde)}, {"injection", c.injection}};
        if (c.result) {
            nlohmann::json history = nlohmann::json::array();
            for (const auto& [alpha, ok] : c.result->history)
                history.push_back({{"alpha", alpha}, {"feasible", ok}});
            row["max_alpha"] = c.result->alpha;
            row["infeasible_above"] = c.result->infeasible_above;
            row["history"] = history;
            row["solves"] = c.result->stats.solved;
            row["numerical_failures"] = c.result->stats.numerical_failures;
            row["rejected"] = c.result->stats.rejected;
        } else {
            row["error"] = c.error;
        }
        rows.push_back(row);
    }
    return {{"cells", rows}};
}

SampledDataConfig pendulum_config(double h, int coordinate) {
    SampledDataConfig config;
    config.A_c = Eigen::MatrixXd::Zero(2, 2);
    config.A_c(0, 1) = 1.0;
    config.p_c = NonlinearitySpec{"pendulum_sin", {1.0, static_cast<double>(coordinate)}};
    config.h = h;
    config.validate();
    return config;
}

SystemModel pendulum_model(double h, int coordinate) {
    if (coordinate != 1 && coordinate != 2)
        throw ModelError("pendulum coordinate must be 1 or 2");
    Eigen::MatrixXd C(1, 2);
    C << 1, 0;
    Eigen::MatrixXd Dc = Eigen::MatrixXd::Zero(2, 2);
    Dc(1, coordinate - 1) = 1.0;
    Region region{Eigen::Vector2d(-std::numbers::pi / 2, -1.0), Eigen::Vector2d(std::numbers::pi / 2, 1.0)};
    return discretize(pendulum_config(h, coordinate), C, -Dc, Dc, region);
}

Eigen::MatrixXd pendulum_lambda() { return Eigen::Vector2d(0.9, 0.5); }

Eigen::MatrixXd pendulum_reference_S() {
    Eigen::MatrixXd S(2, 2);
    S << 0.6063, -0.0457, -0.6063, 1.0457;
    return S;
}

TransformedObserverGains pendulum_reference_gains() {
    const Eigen::MatrixXd S = pendulum_reference_S();
    return {pendulum_lambda(),         S, S.inverse(), Eigen::Vector2d(1.0, 0.5798),
            Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
}

SynthesisGrid pendulum_grid() {
    SynthesisGrid grid = SynthesisGrid::defaults();
    for (int i = 96; i <= 99; ++i)
        grid.lambda.push_back(i / 100.0);
    return grid;
}

Region pendulum_initial_box() { return {Eigen::Vector2d(-0.5, -0.3), Eigen::Vector2d(0.5, 0.3)}; }

Eigen::VectorXd pendulum_initial_state(std::uint64_t seed) {
    const Region box = pendulum_initial_box();
    std::mt19937_64 rng(seed);
    Eigen::VectorXd x(2);
    for (Eigen::Index i = 0; i < 2; ++i)
        x[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
    return x;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

} // namespace

PendulumRun run_pendulum(const PendulumOptions& options) {
    PendulumRun run;
    run.h = options.h;
    run.model = stage("model", [&] { return pendulum_model(options.h); });
    run.diagnostic = diagnose_direct(run.model.A(), run.model.C());
    run.transform = stage("transform", [&] {
        if (options.reference_transform)
            return make_transform(run.model.A(), run.model.C(), pendulum_lambda(), pendulum_reference_S());
        return build_transform(run.model.A(), run.model.C(), pendulum_lambda());
    });
    run.synthesis = stage("synthesis", [&] {
        SynthesisResult r = grid_synthesize(run.model, options.grid,
                                            TransformedSynthesis{run.transform.Lambda, run.transform.S},
                                            options.synthesis);
        if (!r.found())
            throw SynthesisError("no verified observer on the grid (" + r.status() + ")");
        return r;
    });
    run.x0 = options.x0 ? *options.x0 : pendulum_initial_state(options.seed);
    run.trace = rerun_pendulum(run, run.x0, options.initial_radius, options.horizon, options.seed);
    return run;
}

ObserverTrace rerun_pendulum(const PendulumRun& run, const Eigen::VectorXd& x0, double initial_radius, int horizon,
                             std::uint64_t seed) {
    return stage("simulation", [&] {
        if (!run.synthesis.found())
            throw SimulationError("pendulum run has no synthesized observer");
        const Eigen::VectorXd r = Eigen::VectorXd::Constant(2, initial_radius);
        SimulationOptions sim;
        sim.seed = seed;
        sim.certificate = monitor_certificate(run.model, *run.synthesis.certificate);
        return simulate_sampled(pendulum_config(run.h), run.model, *run.synthesis.gains, x0, x0 + r, x0 - r, horizon,
                                sim);
    });
}

} // namespace iobs
