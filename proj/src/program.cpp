#include "iobs/program.hpp"

#include <algorithm>

#include "iobs/barrier_backend.hpp"
#include "iobs/error.hpp"
#include "iobs/matops.hpp"

namespace iobs {

AffineMatrix VariableLayout::register_block(VariableBlock block) {
    if (contains(block.name))
        throw Error("variable '" + block.name + "' registered twice");
    blocks_.push_back(std::move(block));
    return expression(blocks_.back().name);
}

AffineMatrix VariableLayout::add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return add_masked(name, Eigen::MatrixX<bool>::Constant(rows, cols, true));
}

AffineMatrix VariableLayout::add_masked(const std::string& name, const Eigen::MatrixX<bool>& free_mask) {
    VariableBlock block{name, free_mask.rows(), free_mask.cols(),
                        Eigen::MatrixXi::Constant(free_mask.rows(), free_mask.cols(), -1)};
    for (Eigen::Index i = 0; i < block.rows; ++i)
        for (Eigen::Index j = 0; j < block.cols; ++j)
            if (free_mask(i, j))
                block.index(i, j) = size_++;
    return register_block(std::move(block));
}

AffineMatrix VariableLayout::add_symmetric(const std::string& name, Eigen::Index n) {
    VariableBlock block{name, n, n, Eigen::MatrixXi::Constant(n, n, -1)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            block.index(i, j) = size_;
            block.index(j, i) = size_;
            ++size_;
        }
    return register_block(std::move(block));
}

AffineMatrix VariableLayout::add_fixed_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return add_masked(name, Eigen::MatrixX<bool>::Constant(rows, cols, false));
}

AffineMatrix VariableLayout::add_fixed(const std::string& name, const Eigen::MatrixXd& value) {
    VariableBlock block{name, value.rows(), value.cols(), Eigen::MatrixXi::Constant(value.rows(), value.cols(), -1),
                        value};
    return register_block(std::move(block));
}

bool VariableLayout::contains(const std::string& name) const {
    return std::any_of(blocks_.begin(), blocks_.end(),
                       [&](const VariableBlock& b) { return b.name == name; });
}

const VariableBlock& VariableLayout::block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name)
            return b;
    throw Error("unknown variable '" + name + "'");
}

AffineMatrix VariableLayout::expression(const std::string& name) const {
    const VariableBlock& b = block(name);
    AffineMatrix out = b.fixed.size() ? AffineMatrix(b.fixed) : AffineMatrix(b.rows, b.cols);
    for (Eigen::Index i = 0; i < b.rows; ++i)
        for (Eigen::Index j = 0; j < b.cols; ++j) {
            if (b.index(i, j) < 0)
                continue;
            Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(b.rows, b.cols);
            unit(i, j) = 1.0;
            out.add_term(b.index(i, j), unit);
        }
    return out;
}

Eigen::MatrixXd VariableLayout::extract(const std::string& name, const Eigen::VectorXd& x) const {
    const VariableBlock& b = block(name);
    Eigen::MatrixXd out = b.fixed.size() ? b.fixed : Eigen::MatrixXd::Zero(b.rows, b.cols);
    for (Eigen::Index i = 0; i < b.rows; ++i)
        for (Eigen::Index j = 0; j < b.cols; ++j)
            if (b.index(i, j) >= 0)
                out(i, j) = x[b.index(i, j)];
    return out;
}

void VariableLayout::assign(const std::string& name, const Eigen::MatrixXd& value, Eigen::VectorXd& x) const {
    const VariableBlock& b = block(name);
    if (value.rows() != b.rows || value.cols() != b.cols)
        throw DimensionError("assign '" + name + "': shape mismatch");
    if (x.size() != size_)
        x = Eigen::VectorXd::Zero(size_);
    for (Eigen::Index i = 0; i < b.rows; ++i)
        for (Eigen::Index j = 0; j < b.cols; ++j)
            if (b.index(i, j) >= 0)
                x[b.index(i, j)] = value(i, j);
}

void FeasibilityProgram::add(std::string name, ConstraintSense sense, AffineMatrix expr) {
    if (sense != ConstraintSense::Nonnegative && expr.rows() != expr.cols())
        throw DimensionError("semidefinite constraint '" + name + "' is not square");
    constraints.push_back({std::move(name), sense, std::move(expr)});
}

const ProgramConstraint& FeasibilityProgram::constraint(const std::string& name) const {
    for (const auto& c : constraints)
        if (c.name == name)
            return c;
    throw Error("unknown constraint '" + name + "'");
}

std::vector<const ProgramConstraint*> FeasibilityProgram::semidefinite_blocks() const {
    std::vector<const ProgramConstraint*> out;
    for (const auto& c : constraints)
        if (c.sense != ConstraintSense::Nonnegative)
            out.push_back(&c);
    return out;
}

double constraint_violation(ConstraintSense sense, const Eigen::MatrixXd& value) {
    if (value.size() == 0)
        return 0.0;
    switch (sense) {
    case ConstraintSense::Nonnegative:
        return std::max(0.0, -value.minCoeff());
    case ConstraintSense::PositiveSemidefinite:
        return std::max(0.0, -min_sym_eigenvalue(value));
    case ConstraintSense::NegativeSemidefinite:
        return std::max(0.0, max_sym_eigenvalue(value));
    }
    return 0.0;
}

std::map<std::string, double> FeasibilityProgram::residuals(const Eigen::VectorXd& x) const {
    std::map<std::string, double> out;
    for (const auto& c : constraints)
        out[c.name] = constraint_violation(c.sense, c.expr.evaluate(x));
    return out;
}

double FeasibilityProgram::worst_residual(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& [name, r] : residuals(x))
        worst = std::max(worst, r);
    return worst;
}

const char* to_string(SolveStatus status) {
    switch (status) {
    case SolveStatus::Feasible:
        return "feasible";
    case SolveStatus::Infeasible:
        return "infeasible";
    case SolveStatus::NumericalFailure:
        return "numerical_failure";
    }
    return "unknown";
}

SolveResult solve_feasibility(const FeasibilityProgram& program, const FeasibilityBackend& backend,
                              double check_tol) {
    SolveResult result = backend.solve(program);
    if (result.status != SolveStatus::Feasible)
        return result;
    if (result.x.size() != program.layout.size()) {
        result.status = SolveStatus::NumericalFailure;
        result.message = "backend returned a decision vector of the wrong length";
        return result;
    }
    const double worst = program.worst_residual(result.x);
    if (!(worst <= check_tol)) {
        result.status = SolveStatus::NumericalFailure;
        result.message = "returned point violates constraints by " + std::to_string(worst);
    }
    return result;
}

std::shared_ptr<const FeasibilityBackend> default_backend() {
    static const auto backend = std::make_shared<const BarrierBackend>();
    return backend;
}

} // namespace iobs
