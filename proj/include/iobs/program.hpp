#pragma once

// Feasibility programs over a flat decision vector: named matrix variables,
// entrywise-nonnegativity constraints and semidefinite constraints, all
// affine in the decision vector.

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iobs/affine.hpp"

namespace iobs {

struct VariableBlock {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    // Decision index of every entry; -1 marks a fixed entry.
    Eigen::MatrixXi index;
    // Values of the fixed entries (empty means zero).
    Eigen::MatrixXd fixed;
};

class VariableLayout {
public:
    // Dense matrix variable, every entry free.
    AffineMatrix add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    // Matrix variable whose entries are free only where `free_mask` is true.
    AffineMatrix add_masked(const std::string& name, const Eigen::MatrixX<bool>& free_mask);
    // Symmetric n x n variable (n(n+1)/2 decision entries).
    AffineMatrix add_symmetric(const std::string& name, Eigen::Index n);
    AffineMatrix add_scalar(const std::string& name) { return add_matrix(name, 1, 1); }
    // Matrix fixed at zero that still appears in the layout (e.g. a disabled gain).
    AffineMatrix add_fixed_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    // Matrix pinned to a constant value.
    AffineMatrix add_fixed(const std::string& name, const Eigen::MatrixXd& value);

    [[nodiscard]] int size() const { return size_; }
    [[nodiscard]] bool contains(const std::string& name) const;
    [[nodiscard]] const VariableBlock& block(const std::string& name) const;
    [[nodiscard]] const std::vector<VariableBlock>& blocks() const { return blocks_; }
    // Affine expression of a registered variable.
    [[nodiscard]] AffineMatrix expression(const std::string& name) const;
    // Value of a variable at a decision vector.
    [[nodiscard]] Eigen::MatrixXd extract(const std::string& name, const Eigen::VectorXd& x) const;
    // Inverse of extract: write a variable's value into a decision vector.
    void assign(const std::string& name, const Eigen::MatrixXd& value, Eigen::VectorXd& x) const;

private:
    AffineMatrix register_block(VariableBlock block);

    std::vector<VariableBlock> blocks_;
    int size_ = 0;
};

enum class ConstraintSense {
    Nonnegative,           // every entry >= 0
    PositiveSemidefinite,  // symmetric, >= 0 in the Loewner order
    NegativeSemidefinite,  // symmetric, <= 0 in the Loewner order
};

struct ProgramConstraint {
    std::string name;
    ConstraintSense sense = ConstraintSense::Nonnegative;
    AffineMatrix expr;
};

struct FeasibilityProgram {
    VariableLayout layout;
    std::vector<ProgramConstraint> constraints;
    double tau = 1.0;
    double lambda = 0.0;

    void add(std::string name, ConstraintSense sense, AffineMatrix expr);
    [[nodiscard]] const ProgramConstraint& constraint(const std::string& name) const;
    [[nodiscard]] std::vector<const ProgramConstraint*> semidefinite_blocks() const;

    // Worst violation of each constraint at x (0 when satisfied).
    [[nodiscard]] std::map<std::string, double> residuals(const Eigen::VectorXd& x) const;
    [[nodiscard]] double worst_residual(const Eigen::VectorXd& x) const;
};

// Worst violation of a single constraint.
[[nodiscard]] double constraint_violation(ConstraintSense sense, const Eigen::MatrixXd& value);

enum class SolveStatus { Feasible, Infeasible, NumericalFailure };

[[nodiscard]] const char* to_string(SolveStatus status);

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;
    // Uniform slack achieved on every constraint (negative of the phase-I
    // objective); positive for strictly feasible points.
    double margin = 0.0;
    // Lower bound on the best achievable violation when infeasibility is
    // certified.
    double infeasibility_bound = 0.0;
    int newton_steps = 0;
    std::string message;
};

// Interface to any conic feasibility solver.
class FeasibilityBackend {
public:
    virtual ~FeasibilityBackend() = default;
    [[nodiscard]] virtual SolveResult solve(const FeasibilityProgram& program) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

// Solve and independently check the returned point against every constraint;
// a point that fails the check is reported as a numerical failure.
[[nodiscard]] SolveResult solve_feasibility(const FeasibilityProgram& program,
                                            const FeasibilityBackend& backend,
                                            double check_tol = 1e-7);

[[nodiscard]] std::shared_ptr<const FeasibilityBackend> default_backend();

} // namespace iobs
