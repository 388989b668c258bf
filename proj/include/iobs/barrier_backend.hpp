#pragma once

#include "iobs/program.hpp"

namespace iobs {

struct BarrierOptions {
    // Normalization box |x_i| <= box_radius keeps the phase-I problem bounded.
    double box_radius = 1e3;
    // Stop early once every constraint holds with at least this slack.
    double target_margin = 1e-5;
    // Terminate when the barrier duality-gap bound m/t drops below this.
    double gap_tol = 1e-9;
    double initial_t = 1.0;
    double t_growth = 20.0;
    double newton_tol = 1e-10;
    int max_newton_per_center = 100;
    int max_outer = 80;
};

// Dense log-barrier (phase-I) method. It minimizes a uniform slack s subject
// to
//
//     g(x) + s >= 0 (entrywise),   F(x) + s I >= 0 (Loewner),
//
// and reports feasibility when s < 0, infeasibility when the barrier
// duality-gap bound proves s* > 0. Sized for programs with tens of variables
// and semidefinite blocks up to a few dozen rows.
class BarrierBackend final : public FeasibilityBackend {
public:
    explicit BarrierBackend(BarrierOptions options = {}) : options_(options) {}

    [[nodiscard]] SolveResult solve(const FeasibilityProgram& program) const override;
    [[nodiscard]] std::string name() const override { return "dense-log-barrier"; }

    [[nodiscard]] const BarrierOptions& options() const { return options_; }

private:
    BarrierOptions options_;
};

} // namespace iobs
