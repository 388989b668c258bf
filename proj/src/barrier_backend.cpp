#include "iobs/barrier_backend.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "iobs/matops.hpp"

namespace iobs {

namespace {

struct SemidefiniteBlock {
    Eigen::Index dim = 0;
    Eigen::MatrixXd constant;
    std::vector<int> index;
    std::vector<Eigen::MatrixXd> coeff;
};

// Program flattened to  G x + b >= 0  and  F_j(x) >= 0.
struct FlatProgram {
    int n = 0;
    Eigen::MatrixXd G;
    Eigen::VectorXd b;
    std::vector<SemidefiniteBlock> blocks;
    bool constant_violation = false;
    std::string violated;
};

FlatProgram flatten(const FeasibilityProgram& program) {
    FlatProgram flat;
    flat.n = program.layout.size();
    // Identical rows (e.g. the repeated blocks of [[M, N], [N, M]]) are kept once.
    std::map<std::vector<double>, bool> seen;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> offsets;

    for (const auto& c : program.constraints) {
        if (c.sense == ConstraintSense::Nonnegative) {
            for (Eigen::Index i = 0; i < c.expr.rows(); ++i)
                for (Eigen::Index j = 0; j < c.expr.cols(); ++j) {
                    std::vector<double> key(flat.n + 1, 0.0);
                    bool has_variable = false;
                    for (const auto& [index, coeff] : c.expr.terms())
                        if (coeff(i, j) != 0.0) {
                            key[index] = coeff(i, j);
                            has_variable = true;
                        }
                    key[flat.n] = c.expr.constant()(i, j);
                    if (!has_variable) {
                        if (key[flat.n] < 0.0) {
                            flat.constant_violation = true;
                            flat.violated = c.name;
                        }
                        continue;
                    }
                    if (!seen.emplace(key, true).second)
                        continue;
                    rows.emplace_back(Eigen::Map<const Eigen::VectorXd>(key.data(), flat.n));
                    offsets.push_back(key[flat.n]);
                }
            continue;
        }
        const double sign = c.sense == ConstraintSense::PositiveSemidefinite ? 1.0 : -1.0;
        SemidefiniteBlock block;
        block.dim = c.expr.rows();
        block.constant = sign * 0.5 * (c.expr.constant() + c.expr.constant().transpose());
        for (const auto& [index, coeff] : c.expr.terms()) {
            block.index.push_back(index);
            block.coeff.emplace_back(sign * 0.5 * (coeff + coeff.transpose()));
        }
        if (block.index.empty()) {
            if (block.dim > 0 && min_sym_eigenvalue(block.constant) < 0.0) {
                flat.constant_violation = true;
                flat.violated = c.name;
            }
            continue;
        }
        flat.blocks.push_back(std::move(block));
    }

    flat.G.resize(static_cast<Eigen::Index>(rows.size()), flat.n);
    flat.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        flat.G.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        flat.b[static_cast<Eigen::Index>(r)] = offsets[r];
    }
    return flat;
}

// Phase-I barrier for decision v = (x, s):
//   t s - sum log(Gx + b + s) - sum log(R^2 - x_i^2) - log(s + 1) - sum logdet(F_j(x) + s I)
class PhaseOneBarrier {
public:
    PhaseOneBarrier(const FlatProgram& flat, double radius) : flat_(flat), radius_(radius) {}

    [[nodiscard]] int dim() const { return flat_.n + 1; }

    [[nodiscard]] double degree() const {
        double m = static_cast<double>(flat_.G.rows()) + 2.0 * flat_.n + 1.0;
        for (const auto& blk : flat_.blocks)
            m += static_cast<double>(blk.dim);
        return m;
    }

    [[nodiscard]] double initial_slack() const {
        double s = 0.0;
        if (flat_.b.size() > 0)
            s = std::max(s, -flat_.b.minCoeff());
        for (const auto& blk : flat_.blocks)
            s = std::max(s, -min_sym_eigenvalue(blk.constant));
        return s + 1.0;
    }

    [[nodiscard]] Eigen::MatrixXd block_value(const SemidefiniteBlock& blk, const Eigen::VectorXd& v) const {
        Eigen::MatrixXd z = blk.constant;
        for (std::size_t k = 0; k < blk.index.size(); ++k)
            z += v[blk.index[k]] * blk.coeff[k];
        z.diagonal().array() += v[flat_.n];
        return z;
    }

    // Barrier value, or nullopt outside the domain.
    [[nodiscard]] std::optional<double> value(const Eigen::VectorXd& v, double t) const {
        const double s = v[flat_.n];
        if (!(s > -1.0))
            return std::nullopt;
        double f = t * s - std::log(s + 1.0);
        const auto x = v.head(flat_.n);
        if (flat_.G.rows() > 0) {
            const Eigen::VectorXd r = flat_.G * x + flat_.b + Eigen::VectorXd::Constant(flat_.b.size(), s);
            if (!(r.minCoeff() > 0.0))
                return std::nullopt;
            f -= r.array().log().sum();
        }
        const Eigen::ArrayXd box = radius_ * radius_ - x.array().square();
        if (flat_.n > 0 && !(box.minCoeff() > 0.0))
            return std::nullopt;
        f -= box.log().sum();
        for (const auto& blk : flat_.blocks) {
            Eigen::LLT<Eigen::MatrixXd> llt(block_value(blk, v));
            if (llt.info() != Eigen::Success)
                return std::nullopt;
            const auto diag = llt.matrixLLT().diagonal().array();
            if (!(diag.minCoeff() > 0.0))
                return std::nullopt;
            f -= 2.0 * diag.log().sum();
        }
        return std::isfinite(f) ? std::optional<double>(f) : std::nullopt;
    }

    // Gradient and Hessian at a point inside the domain.
    void derivatives(const Eigen::VectorXd& v, double t, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
        const int n = flat_.n;
        const double s = v[n];
        grad = Eigen::VectorXd::Zero(n + 1);
        hess = Eigen::MatrixXd::Zero(n + 1, n + 1);
        grad[n] = t - 1.0 / (s + 1.0);
        hess(n, n) = 1.0 / ((s + 1.0) * (s + 1.0));

        const auto x = v.head(n);
        if (flat_.G.rows() > 0) {
            const Eigen::VectorXd r = flat_.G * x + flat_.b + Eigen::VectorXd::Constant(flat_.b.size(), s);
            const Eigen::VectorXd inv = r.cwiseInverse();
            grad.head(n) -= flat_.G.transpose() * inv;
            grad[n] -= inv.sum();
            Eigen::MatrixXd scaled(flat_.G.rows(), n + 1);
            scaled.leftCols(n) = inv.asDiagonal() * flat_.G;
            scaled.col(n) = inv;
            hess.noalias() += scaled.transpose() * scaled;
        }
        for (int i = 0; i < n; ++i) {
            const double up = radius_ - x[i];
            const double down = radius_ + x[i];
            grad[i] += 1.0 / up - 1.0 / down;
            hess(i, i) += 1.0 / (up * up) + 1.0 / (down * down);
        }
        for (const auto& blk : flat_.blocks) {
            Eigen::LLT<Eigen::MatrixXd> llt(block_value(blk, v));
            const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(blk.dim, blk.dim));
            const std::size_t k_count = blk.index.size();
            std::vector<Eigen::MatrixXd> scaled(k_count + 1);
            std::vector<int> slot(k_count + 1);
            for (std::size_t k = 0; k < k_count; ++k) {
                scaled[k] = linv * blk.coeff[k] * linv.transpose();
                slot[k] = blk.index[k];
            }
            scaled[k_count] = linv * linv.transpose();
            slot[k_count] = n;
            for (std::size_t a = 0; a <= k_count; ++a) {
                grad[slot[a]] -= scaled[a].trace();
                for (std::size_t c = a; c <= k_count; ++c) {
                    const double h = scaled[a].cwiseProduct(scaled[c]).sum();
                    hess(slot[a], slot[c]) += h;
                    if (c != a)
                        hess(slot[c], slot[a]) += h;
                }
            }
        }
    }

private:
    const FlatProgram& flat_;
    double radius_;
};

} // namespace

SolveResult BarrierBackend::solve(const FeasibilityProgram& program) const {
    SolveResult result;
    const FlatProgram flat = flatten(program);
    if (flat.constant_violation) {
        result.status = SolveStatus::Infeasible;
        result.message = "constant constraint '" + flat.violated + "' is violated";
        result.infeasibility_bound = std::numeric_limits<double>::infinity();
        return result;
    }

    const PhaseOneBarrier barrier(flat, options_.box_radius);
    const int n = flat.n;
    const double m = barrier.degree();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
    v[n] = barrier.initial_slack();

    auto finish = [&](SolveStatus status, std::string message) {
        result.status = status;
        result.x = v.head(n);
        result.margin = -v[n];
        result.message = std::move(message);
        return result;
    };

    double t = options_.initial_t;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    bool stalled = false;

    for (int outer = 0; outer < options_.max_outer && !stalled; ++outer) {
        for (int iter = 0; iter < options_.max_newton_per_center; ++iter) {
            barrier.derivatives(v, t, grad, hess);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
            Eigen::VectorXd step = ldlt.solve(-grad);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                stalled = true;
                break;
            }
            const double decrement = -grad.dot(step);
            if (decrement / 2.0 <= options_.newton_tol)
                break;

            const auto f0 = barrier.value(v, t);
            if (!f0) {
                stalled = true;
                break;
            }
            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
                const Eigen::VectorXd trial = v + alpha * step;
                const auto f1 = barrier.value(trial, t);
                if (f1 && *f1 <= *f0 - 0.25 * alpha * decrement) {
                    v = trial;
                    accepted = true;
                    break;
                }
            }
            ++result.newton_steps;
            if (!accepted) {
                stalled = true;
                break;
            }
            if (-v[n] >= options_.target_margin)
                return finish(SolveStatus::Feasible, "strictly feasible point found");
        }
        if (stalled)
            break;

        const double gap = m / t;
        if (v[n] - gap > 0.0) {
            result.infeasibility_bound = v[n] - gap;
            return finish(SolveStatus::Infeasible, "phase-I optimum bounded away from zero");
        }
        if (gap < options_.gap_tol)
            break;
        t *= options_.t_growth;
    }

    const double gap = m / t;
    if (v[n] < 0.0)
        return finish(SolveStatus::Feasible, "feasible with small margin");
    if (v[n] - gap > 0.0 || (!stalled && gap < options_.gap_tol)) {
        result.infeasibility_bound = std::max(0.0, v[n] - gap);
        return finish(SolveStatus::Infeasible, "phase-I optimum is nonnegative");
    }
    return finish(SolveStatus::NumericalFailure,
                  stalled ? "Newton iteration stalled" : "iteration limit reached");
}

} // namespace iobs
