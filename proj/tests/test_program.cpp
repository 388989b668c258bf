#include <doctest.h>

#include <random>

#include "iobs/barrier_backend.hpp"
#include "iobs/error.hpp"
#include "iobs/program.hpp"
#include "oracles.hpp"

using namespace iobs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double min_eig(const MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

double max_eig(const MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose())).eigenvalues().maxCoeff();
}

// Program: P - I >= 0, A^T P A - P + I <= 0.
FeasibilityProgram lyapunov_program(const MatrixXd& A) {
    FeasibilityProgram program;
    const auto n = A.rows();
    const AffineMatrix P = program.layout.add_symmetric("P", n);
    program.add("P_definite", ConstraintSense::PositiveSemidefinite, P - AffineMatrix::identity(n));
    program.add("decrease", ConstraintSense::NegativeSemidefinite,
                A.transpose() * P * A - P + AffineMatrix::identity(n));
    return program;
}

class LyingBackend final : public FeasibilityBackend {
public:
    [[nodiscard]] SolveResult solve(const FeasibilityProgram& program) const override {
        SolveResult r;
        r.status = SolveStatus::Feasible;
        r.x = VectorXd::Zero(program.layout.size());
        return r;
    }
    [[nodiscard]] std::string name() const override { return "lying"; }
};

} // namespace

TEST_CASE("affine expressions agree with dense evaluation") {
    std::mt19937_64 rng(5);
    VariableLayout layout;
    const AffineMatrix X = layout.add_matrix("X", 2, 3);
    const AffineMatrix Y = layout.add_symmetric("Y", 3);
    CHECK(layout.size() == 6 + 6);
    const MatrixXd L = oracle::uniform(rng, 4, 2, -1, 1);
    const MatrixXd R = oracle::uniform(rng, 3, 3, -1, 1);
    const AffineMatrix expr = L * X * R + 2.0 * (L * X);
    const AffineMatrix sym = Y - Y.transpose() + AffineMatrix(R);
    for (int trial = 0; trial < 20; ++trial) {
        const VectorXd x = oracle::uniform(rng, layout.size(), 1, -3, 3);
        const MatrixXd Xv = layout.extract("X", x);
        const MatrixXd Yv = layout.extract("Y", x);
        CHECK(oracle::max_abs(Yv - Yv.transpose()) == 0.0);
        CHECK(oracle::max_abs(expr.evaluate(x) - (L * Xv * R + 2.0 * L * Xv)) < 1e-12);
        CHECK(oracle::max_abs(sym.evaluate(x) - R) < 1e-12);
        const AffineMatrix big = block2x2(X, X, -X, AffineMatrix::zero(2, 3));
        MatrixXd dense(4, 6);
        dense << Xv, Xv, -Xv, MatrixXd::Zero(2, 3);
        CHECK(oracle::max_abs(big.evaluate(x) - dense) == 0.0);
        CHECK(oracle::max_abs(big.block(2, 0, 2, 3).evaluate(x) + Xv) == 0.0);
        CHECK(oracle::max_abs(block_diag2(Y).evaluate(x).bottomRightCorner(3, 3) - Yv) == 0.0);
    }
    CHECK_THROWS_AS((void)(AffineMatrix::zero(2, 2) + AffineMatrix::zero(2, 3)), DimensionError);
}

TEST_CASE("masked, fixed and assigned variables") {
    VariableLayout layout;
    Eigen::MatrixX<bool> mask(2, 2);
    mask << true, false, false, true;
    (void)layout.add_masked("D", mask);
    MatrixXd pinned(1, 2);
    pinned << 0.25, -4.0;
    (void)layout.add_fixed("H", pinned);
    (void)layout.add_fixed_zero("Z", 2, 1);
    CHECK(layout.size() == 2);
    VectorXd x = VectorXd::Zero(layout.size());
    MatrixXd d(2, 2);
    d << 3, 0, 0, -7;
    layout.assign("D", d, x);
    CHECK(layout.extract("D", x) == d);
    CHECK(layout.extract("H", x) == pinned);
    CHECK(layout.expression("H").is_constant());
    CHECK(layout.extract("Z", x) == MatrixXd::Zero(2, 1));
    CHECK(layout.contains("Z"));
    CHECK_FALSE(layout.contains("W"));
}

TEST_CASE("constraint violation measures") {
    MatrixXd m(2, 2);
    m << 1, -0.5, -0.5, 1;
    CHECK(constraint_violation(ConstraintSense::Nonnegative, m) == doctest::Approx(0.5));
    CHECK(constraint_violation(ConstraintSense::PositiveSemidefinite, m) == 0.0);
    CHECK(constraint_violation(ConstraintSense::NegativeSemidefinite, m) == doctest::Approx(1.5));
}

TEST_CASE("trivially feasible semidefinite program") {
    FeasibilityProgram program;
    const AffineMatrix P = program.layout.add_symmetric("P", 3);
    program.add("P_definite", ConstraintSense::PositiveSemidefinite, P - 1e-3 * AffineMatrix::identity(3));
    const BarrierBackend backend;
    const SolveResult r = solve_feasibility(program, backend);
    REQUIRE(r.status == SolveStatus::Feasible);
    CHECK(min_eig(program.layout.extract("P", r.x)) >= 1e-3 - 1e-9);
    CHECK(program.worst_residual(r.x) <= 1e-9);
}

TEST_CASE("Lyapunov inequality: feasible exactly for Schur matrices") {
    const BarrierBackend backend;
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        MatrixXd A = oracle::uniform(rng, 3, 3, -1, 1);
        double radius = 0.0;
        for (const auto& z : oracle::sorted_spectrum(A))
            radius = std::max(radius, std::abs(z));
        A *= 0.7 / radius;
        const auto program = lyapunov_program(A);
        const SolveResult r = solve_feasibility(program, backend);
        REQUIRE(r.status == SolveStatus::Feasible);
        const MatrixXd P = program.layout.extract("P", r.x);
        CHECK(min_eig(P - MatrixXd::Identity(3, 3)) >= -1e-7);
        CHECK(max_eig(A.transpose() * P * A - P + MatrixXd::Identity(3, 3)) <= 1e-7);

        A *= 1.2 / 0.7;
        const SolveResult bad = solve_feasibility(lyapunov_program(A), backend);
        CHECK(bad.status == SolveStatus::Infeasible);
    }
}

TEST_CASE("infeasible linear program") {
    FeasibilityProgram program;
    const AffineMatrix x = program.layout.add_scalar("x");
    program.add("x_at_least_one", ConstraintSense::Nonnegative, x - AffineMatrix(MatrixXd::Ones(1, 1)));
    program.add("x_nonpositive", ConstraintSense::Nonnegative, -x);
    const SolveResult r = solve_feasibility(program, BarrierBackend{});
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK(r.infeasibility_bound > 0.0);
    CHECK(r.infeasibility_bound <= 0.5 + 1e-6);
}

TEST_CASE("returned points are checked independently") {
    FeasibilityProgram program;
    const AffineMatrix x = program.layout.add_scalar("x");
    program.add("x_at_least_one", ConstraintSense::Nonnegative, x - AffineMatrix(MatrixXd::Ones(1, 1)));
    const SolveResult r = solve_feasibility(program, LyingBackend{});
    CHECK(r.status == SolveStatus::NumericalFailure);
    CHECK(default_backend()->name() == "dense-log-barrier");
}
