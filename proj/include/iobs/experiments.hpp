#pragma once

// Built-in experiments: the maximum Jacobian scale admitting an observer for
// a family of two-state systems, and the sampled-data pendulum.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iobs/observer.hpp"
#include "iobs/synthesis.hpp"
#include "iobs/transform.hpp"

namespace iobs {

// ---- Jacobian-scale table ------------------------------------------------

// The six sparsity patterns D~ of the table, in column order.
[[nodiscard]] std::vector<Eigen::MatrixXd> table1_dtilde();

// A = [[1, 0], [0, 0]], C = [1, 0], D_hi = -D_lo = alpha D~ and
// p(x) = alpha D~ sin(x) (coupled_sin), which realizes those bounds.
[[nodiscard]] SystemModel table1_model(const Eigen::MatrixXd& dtilde, double alpha, double w_bound = 0.0);

struct Table1Options {
    SynthesisGrid grid = SynthesisGrid::defaults();
    SynthesisOptions synthesis;
    double alpha_lo = 0.0;
    double alpha_hi = 1.0;
    double width = 5e-3;
};

struct Table1Cell {
    Eigen::MatrixXd dtilde;
    bool injection = false;
    std::optional<MaxAlphaResult> result;
    std::string error;  // set when the cell could not be computed
    double seconds = 0.0;
};

[[nodiscard]] std::vector<Table1Cell> run_table1(const Table1Options& options = {});
[[nodiscard]] nlohmann::json table1_json(const std::vector<Table1Cell>& cells);

// ---- pendulum ------------------------------------------------------------

// dx/dt = [[0, 1], [0, 0]] x + [0; -sin(x_j)], sampled with period h.
[[nodiscard]] SampledDataConfig pendulum_config(double h, int coordinate = 1);
// Euler discretization with D_hi = -D_lo = h e_2 e_j^T, w_hi = -w_lo =
// sqrt(2) h^2 1 and region [-pi/2, pi/2] x [-1, 1].
[[nodiscard]] SystemModel pendulum_model(double h, int coordinate = 1);

[[nodiscard]] Eigen::MatrixXd pendulum_lambda();       // [0.9; 0.5]
[[nodiscard]] Eigen::MatrixXd pendulum_reference_S();  // reference transformation for h = 0.065
// Reference observer for h = 0.065: H = [1; 0.5798], Phi = Gamma = 0.
[[nodiscard]] TransformedObserverGains pendulum_reference_gains();

// Default grid plus lambda in {0.96, ..., 0.99}: the per-sample contraction
// of the error approaches 1 as h shrinks.
[[nodiscard]] SynthesisGrid pendulum_grid();

// Initial states are drawn from this box when none is given.
[[nodiscard]] Region pendulum_initial_box();

struct PendulumOptions {
    double h = 0.065;
    int horizon = 1000;
    std::uint64_t seed = 1;
    std::optional<Eigen::VectorXd> x0;  // drawn from pendulum_initial_box() by seed if absent
    double initial_radius = 0.2;        // x0 -/+ radius gives the initial bounds
    // Transformation: the reference S at h = 0.065 when set, otherwise the
    // eigenvector construction.
    bool reference_transform = true;
    SynthesisGrid grid = pendulum_grid();
    SynthesisOptions synthesis;
};

struct PendulumRun {
    double h = 0.0;
    SystemModel model;
    TransformPair transform;
    DirectDiagnostic diagnostic;
    SynthesisResult synthesis;
    Eigen::VectorXd x0;
    ObserverTrace trace;
};

// Draw x0 from the initial box.
[[nodiscard]] Eigen::VectorXd pendulum_initial_state(std::uint64_t seed);

// Transformation, synthesis and sampled-data simulation. Stage failures are
// rethrown as Error with a "transform: ", "synthesis: " or "simulation: "
// prefix.
[[nodiscard]] PendulumRun run_pendulum(const PendulumOptions& options = {});

// Simulate an already synthesized pendulum observer for another initial
// state.
[[nodiscard]] ObserverTrace rerun_pendulum(const PendulumRun& run, const Eigen::VectorXd& x0, double initial_radius,
                                           int horizon, std::uint64_t seed);

} // namespace iobs
