#include "iobs/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iobs/error.hpp"

namespace iobs {

namespace {

struct ProgramNames {
    const char* injection;
    const char* coupling;
};

constexpr ProgramNames kDirectNames{"K", "G"};
constexpr ProgramNames kTransformedNames{"H", "Gamma"};

// s I for a 1x1 affine scalar s.
AffineMatrix scalar_identity(const AffineMatrix& s, Eigen::Index n) {
    AffineMatrix out(Eigen::MatrixXd(s.constant()(0, 0) * Eigen::MatrixXd::Identity(n, n)));
    for (const auto& [index, coeff] : s.terms())
        out.add_term(index, coeff(0, 0) * Eigen::MatrixXd::Identity(n, n));
    return out;
}

AffineMatrix stack_entries(const std::vector<AffineMatrix>& entries) {
    std::vector<std::vector<AffineMatrix>> grid;
    for (const auto& e : entries)
        grid.push_back({e});
    return blocks(grid);
}

void require_scalars(double tau, double lambda) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw SynthesisError("tau must be positive, got " + std::to_string(tau));
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw SynthesisError("lambda must lie in [0, 1), got " + std::to_string(lambda));
}

// Shared structure of both programs. `linear_part(J)` yields J A - Y C (or
// J aleph); the injection enters through base - X right, with X the
// injection variable.
template <typename LinearPart>
FeasibilityProgram assemble(FeasibilityProgram program, const ProgramNames& names, const MatInterval<double>& bounds,
                            const Eigen::MatrixXd& base, const Eigen::MatrixXd& right, Eigen::Index m, double tau,
                            double lambda, const Margins& margins, bool injection_allowed, const PinnedBlocks& pinned,
                            LinearPart linear_part) {
    require_scalars(tau, lambda);
    const Eigen::Index n = base.rows();
    auto& layout = program.layout;
    program.tau = tau;
    program.lambda = lambda;

    const AffineMatrix J = layout.expression("J");
    const AffineMatrix JA = linear_part(J, layout);
    if ((pinned.injection && (pinned.injection->rows() != n || pinned.injection->cols() != m)) ||
        (pinned.coupling && (pinned.coupling->rows() != n || pinned.coupling->cols() != n)))
        throw DimensionError("pinned injection must be n x m and coupling n x n");
    const AffineMatrix X = pinned.injection   ? layout.add_fixed(names.injection, *pinned.injection)
                           : injection_allowed ? layout.add_matrix(names.injection, n, m)
                                               : layout.add_fixed_zero(names.injection, n, m);
    const AffineMatrix W = pinned.zero_W ? layout.add_fixed_zero("W", n, n) : layout.add_matrix("W", n, n);
    if (pinned.tight_ups && !pinned.injection)
        throw SynthesisError("tight Ups bounds need a pinned injection gain");
    const Eigen::MatrixXd pinned_base =
        pinned.injection ? Eigen::MatrixXd(base - *pinned.injection * right) : Eigen::MatrixXd();
    const AffineMatrix ups_lo = pinned.tight_ups ? layout.add_fixed("Ups_lo", neg_part(pinned_base))
                                                 : layout.add_matrix("Ups_lo", n, n);
    const AffineMatrix ups_hi = pinned.tight_ups ? layout.add_fixed("Ups_hi", pos_part(pinned_base))
                                                 : layout.add_matrix("Ups_hi", n, n);
    const AffineMatrix G = pinned.coupling ? layout.add_fixed(names.coupling, *pinned.coupling)
                                           : layout.add_matrix(names.coupling, n, n);
    const AffineMatrix P = layout.add_symmetric("P", 2 * n);
    const AffineMatrix gamma = layout.add_scalar("gamma");

    std::vector<AffineMatrix> diag, offdiag;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                diag.push_back(J.entry(i, i) - AffineMatrix(Eigen::MatrixXd::Constant(1, 1, margins.eps_pos)));
            else
                offdiag.push_back(-J.entry(i, j));
        }
    program.add("J_diagonal", ConstraintSense::Nonnegative, stack_entries(diag));
    if (!offdiag.empty())
        program.add("J_offdiagonal", ConstraintSense::Nonnegative, stack_entries(offdiag));
    program.add("W_nonneg", ConstraintSense::Nonnegative, W);
    program.add("ups_lo_nonneg", ConstraintSense::Nonnegative, ups_lo);
    program.add("ups_hi_nonneg", ConstraintSense::Nonnegative, ups_hi);
    program.add("coupling_nonneg", ConstraintSense::Nonnegative, G);
    program.add("gamma_positive", ConstraintSense::Nonnegative,
                gamma - AffineMatrix(Eigen::MatrixXd::Constant(1, 1, margins.eps_pos)));
    program.add("P_definite", ConstraintSense::PositiveSemidefinite,
                P - AffineMatrix(Eigen::MatrixXd(margins.eps_pd * Eigen::MatrixXd::Identity(2 * n, 2 * n))));

    const AffineMatrix Q = block2x2(JA + W, W, W, JA + W);
    program.add("Q_nonneg", ConstraintSense::Nonnegative, Q);

    const AffineMatrix M = AffineMatrix(base) - X * right;
    program.add("ups_lower", ConstraintSense::Nonnegative, M + ups_lo);
    program.add("ups_upper", ConstraintSense::Nonnegative, ups_hi - M);
    program.add("coupling_positivity", ConstraintSense::Nonnegative, bounds.lo * ups_hi - bounds.hi * ups_lo + G);

    const AffineMatrix psi_diag = bounds.hi * ups_hi - bounds.lo * ups_lo + G;
    const AffineMatrix Psi = block2x2(psi_diag, G, G, psi_diag);
    const AffineMatrix JJ = block_diag2(J);
    const Eigen::Index k = 2 * n;
    const AffineMatrix Z = AffineMatrix::zero(k, k);
    const AffineMatrix tauI(Eigen::MatrixXd(tau * Eigen::MatrixXd::Identity(k, k)));
    const AffineMatrix lmi = blocks({
        {-lambda * P, Q.transpose(), (tau / 2.0) * Psi.transpose(), Z},
        {Q, P - JJ - JJ.transpose(), JJ, JJ},
        {(tau / 2.0) * Psi, JJ.transpose(), -tauI, Z},
        {Z, JJ.transpose(), Z, -scalar_identity(gamma, k)},
    });
    program.add("lmi", ConstraintSense::NegativeSemidefinite, lmi);
    return program;
}

void add_J(VariableLayout& layout, Eigen::Index n, const PinnedBlocks& pinned) {
    if (pinned.diagonal_J)
        layout.add_masked("J", Eigen::MatrixXd::Identity(n, n).cast<bool>());
    else
        layout.add_matrix("J", n, n);
}

Eigen::MatrixXd identity(Eigen::Index n) { return Eigen::MatrixXd::Identity(n, n); }

double relative_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return std::numeric_limits<double>::infinity();
    if (a.size() == 0)
        return 0.0;
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

double worst_negative(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : std::max(0.0, -m.minCoeff()); }

} // namespace

FeasibilityProgram assemble_direct(const SystemModel& model, double tau, double lambda, const Margins& margins,
                                   const DirectOptions& options) {
    const Eigen::Index n = model.n();
    FeasibilityProgram program;
    add_J(program.layout, n, options.pinned);
    if (options.fixed_L && (options.fixed_L->rows() != n || options.fixed_L->cols() != model.m()))
        throw DimensionError("fixed L must be n x m");
    auto linear_part = [&](const AffineMatrix& J, VariableLayout& layout) {
        if (options.fixed_L)
            return J * Eigen::MatrixXd(model.A() - *options.fixed_L * model.C());
        const AffineMatrix Y = layout.add_matrix("Y", n, model.m());
        return J * model.A() - Y * model.C();
    };
    return assemble(std::move(program), kDirectNames, MatInterval<double>(model.D_lo(), model.D_hi()), identity(n),
                    model.C(), model.m(), tau, lambda, margins, options.injection_allowed, options.pinned,
                    linear_part);
}

FeasibilityProgram assemble_transformed(const SystemModel& model, const Eigen::MatrixXd& Lambda,
                                        const Eigen::MatrixXd& S, double tau, double lambda, const Margins& margins,
                                        bool injection_allowed, const PinnedBlocks& pinned) {
    const TransformPair pair = make_transform(model.A(), model.C(), Lambda, S);
    const Eigen::Index n = model.n();
    FeasibilityProgram program;
    add_J(program.layout, n, pinned);
    auto linear_part = [&](const AffineMatrix& J, VariableLayout&) { return J * pair.aleph; };
    return assemble(std::move(program), kTransformedNames, theta_bounds(S, model.D_lo(), model.D_hi()), pair.U,
                    Eigen::MatrixXd(model.C() * pair.U), model.m(), tau, lambda, margins, injection_allowed,
                    pinned, linear_part);
}

SynthesisVariables extract_variables(const FeasibilityProgram& program, const Eigen::VectorXd& x) {
    const auto& layout = program.layout;
    const bool transformed = layout.contains("H");
    const ProgramNames& names = transformed ? kTransformedNames : kDirectNames;
    SynthesisVariables vars;
    vars.J = layout.extract("J", x);
    if (layout.contains("Y"))
        vars.Y = layout.extract("Y", x);
    vars.K = layout.extract(names.injection, x);
    vars.W = layout.extract("W", x);
    vars.ups_lo = layout.extract("Ups_lo", x);
    vars.ups_hi = layout.extract("Ups_hi", x);
    vars.G = layout.extract(names.coupling, x);
    vars.P = layout.extract("P", x);
    vars.gamma = layout.extract("gamma", x)(0, 0);
    return vars;
}

bool Certificate::accepted() const {
    return !post_checks.empty() &&
           std::all_of(post_checks.begin(), post_checks.end(), [](const auto& kv) { return kv.second; });
}

MatInterval<double> theta_bounds(const Eigen::MatrixXd& S, const Eigen::MatrixXd& D_lo, const Eigen::MatrixXd& D_hi) {
    return interval_product(S, MatInterval<double>(D_lo, D_hi));
}

MatInterval<double> effective_jacobian_bounds(const SystemModel& model, const std::optional<TransformPair>& transform) {
    if (transform)
        return theta_bounds(transform->S, model.D_lo(), model.D_hi());
    return {model.D_lo(), model.D_hi()};
}

Eigen::MatrixXd psi_matrix(const MatInterval<double>& bounds, const Eigen::MatrixXd& ups_lo,
                           const Eigen::MatrixXd& ups_hi, const Eigen::MatrixXd& G) {
    return mirror_blocks(bounds.hi * ups_hi - bounds.lo * ups_lo + G, G);
}

Eigen::MatrixXd error_dynamics_matrix(const ObserverGains& gains, const SystemModel& model) {
    if (const auto* d = std::get_if<DirectObserverGains>(&gains)) {
        const Eigen::MatrixXd M = model.A() - d->L * model.C();
        return mirror_blocks(M + d->F, d->F);
    }
    const auto& t = std::get<TransformedObserverGains>(gains);
    const Eigen::MatrixXd aleph = t.S * (model.A() - t.Lambda * model.C()) * t.U;
    return mirror_blocks(aleph + t.Phi, t.Phi);
}

Eigen::MatrixXd assembled_lmi(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Psi, const Eigen::MatrixXd& J,
                              const Eigen::MatrixXd& P, double tau, double lambda, double gamma) {
    const Eigen::Index k = Q.rows();
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(k, k);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd JJ = mirror_blocks(J, Eigen::MatrixXd::Zero(J.rows(), J.cols()));
    Eigen::MatrixXd out(4 * k, 4 * k);
    out << -lambda * P, Q.transpose(), (tau / 2.0) * Psi.transpose(), Z,
           Q, P - JJ - JJ.transpose(), JJ, JJ,
           (tau / 2.0) * Psi, JJ.transpose(), -tau * I, Z,
           Z, JJ.transpose(), Z, -gamma * I;
    return out;
}

bool VerificationReport::all_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

VerificationReport verify_certificate(const SystemModel& model, const ObserverGains& gains, const Certificate& cert,
                                      const VerifyTolerances& tol) {
    validate_gains(gains, model, std::numeric_limits<double>::infinity());
    const auto& v = cert.variables;
    const Eigen::Index n = model.n();
    VerificationReport report;
    auto& r = report.residuals;
    auto& c = report.checks;

    const bool transformed = cert.transformed();
    if (transformed != std::holds_alternative<TransformedObserverGains>(gains))
        throw Error("certificate and gains disagree on the coordinate frame");

    Eigen::MatrixXd JA;
    Eigen::MatrixXd injection_base;
    if (transformed) {
        const TransformPair& t = *cert.transform;
        JA = v.J * (t.S * (model.A() - t.Lambda * model.C()) * t.U);
        injection_base = t.U - v.K * model.C() * t.U;
    } else {
        JA = v.J * model.A() - v.Y * model.C();
        injection_base = identity(n) - v.K * model.C();
    }
    const MatInterval<double> bounds = effective_jacobian_bounds(model, cert.transform);
    const Eigen::MatrixXd Q = mirror_blocks(JA + v.W, v.W);
    const Eigen::MatrixXd Psi = psi_matrix(bounds, v.ups_lo, v.ups_hi, v.G);

    r["Q_nonneg"] = worst_negative(Q);
    r["ups_lower"] = worst_negative(injection_base + v.ups_lo);
    r["ups_upper"] = worst_negative(v.ups_hi - injection_base);
    r["coupling_positivity"] = worst_negative(bounds.lo * v.ups_hi - bounds.hi * v.ups_lo + v.G);
    r["W_nonneg"] = worst_negative(v.W);
    r["G_nonneg"] = worst_negative(v.G);
    r["ups_nonneg"] = std::max(worst_negative(v.ups_lo), worst_negative(v.ups_hi));
    r["lmi"] = std::max(0.0, max_sym_eigenvalue(assembled_lmi(Q, Psi, v.J, v.P, cert.tau, cert.lambda, v.gamma)));

    c["tau_positive"] = cert.tau > 0.0;
    c["lambda_in_range"] = cert.lambda >= 0.0 && cert.lambda < 1.0;
    c["gamma_positive"] = v.gamma > 0.0;
    c["P_positive_definite"] = min_sym_eigenvalue(v.P) > 0.0 && relative_gap(v.P, v.P.transpose()) <= tol.consistency;
    c["J_mmatrix_structure"] = is_mmatrix_structure(v.J, tol.nonneg);
    c["W_nonneg"] = r["W_nonneg"] <= tol.entrywise;
    c["G_nonneg"] = r["G_nonneg"] <= tol.entrywise;
    c["ups_nonneg"] = r["ups_nonneg"] <= tol.entrywise;
    c["Q_nonneg"] = r["Q_nonneg"] <= tol.entrywise;
    c["ups_sandwich"] = std::max(r["ups_lower"], r["ups_upper"]) <= tol.entrywise;
    c["coupling_positivity"] = r["coupling_positivity"] <= tol.entrywise;
    c["lmi_nsd"] = r["lmi"] <= tol.lmi;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(v.J);
    const bool invertible = lu.isInvertible();
    c["J_invertible"] = invertible;
    if (!invertible) {
        c["J_inverse_nonneg"] = c["dynamics_nonneg"] = c["dynamics_schur"] = false;
        c["gains_match"] = c["dynamics_block_form_match"] = false;
        return report;
    }
    const Eigen::MatrixXd Jinv = lu.inverse();
    c["J_inverse_nonneg"] = is_nonneg(Jinv, tol.nonneg);

    const Eigen::MatrixXd JJinv = mirror_blocks(Jinv, Eigen::MatrixXd::Zero(n, n));
    const Eigen::MatrixXd dynamics = JJinv * Q;
    r["dynamics_nonneg"] = worst_negative(dynamics);
    c["dynamics_nonneg"] = r["dynamics_nonneg"] <= tol.nonneg;
    const double rho = spectral_radius(dynamics);
    r["dynamics_spectral_radius"] = rho;
    c["dynamics_schur"] = rho < 1.0;

    // Gains must be the ones this certificate recovers.
    double mismatch = 0.0;
    if (const auto* d = std::get_if<DirectObserverGains>(&gains)) {
        mismatch = std::max({relative_gap(d->L, Jinv * v.Y), relative_gap(d->F, Jinv * v.W),
                             relative_gap(d->K, v.K), relative_gap(d->G, v.G)});
        c["coupling_matrices_nonneg"] = is_nonneg(d->F, tol.nonneg) && is_nonneg(d->G, tol.nonneg);
    } else {
        const auto& t = std::get<TransformedObserverGains>(gains);
        mismatch = std::max({relative_gap(t.Phi, Jinv * v.W), relative_gap(t.H, v.K), relative_gap(t.Gamma, v.G),
                             relative_gap(t.S, cert.transform->S), relative_gap(t.Lambda, cert.transform->Lambda)});
        c["coupling_matrices_nonneg"] = is_nonneg(t.Phi, tol.nonneg) && is_nonneg(t.Gamma, tol.nonneg);
    }
    r["gains_mismatch"] = mismatch;
    c["gains_match"] = mismatch <= tol.consistency;

    const double block_gap = relative_gap(error_dynamics_matrix(gains, model), dynamics);
    r["dynamics_block_form_gap"] = block_gap;
    c["dynamics_block_form_match"] = block_gap <= tol.consistency;
    return report;
}

VerificationReport check_injection_constraints(const SystemModel& model, const std::optional<TransformPair>& transform,
                                               const Eigen::MatrixXd& injection, const Eigen::MatrixXd& coupling,
                                               double tol) {
    const Eigen::Index n = model.n();
    if (injection.rows() != n || injection.cols() != model.m() || coupling.rows() != n || coupling.cols() != n)
        throw DimensionError("injection gain must be n x m and coupling n x n");
    const Eigen::MatrixXd base =
        transform ? Eigen::MatrixXd(transform->U - injection * model.C() * transform->U)
                  : Eigen::MatrixXd(identity(n) - injection * model.C());
    const Eigen::MatrixXd ups_hi = pos_part(base);
    const Eigen::MatrixXd ups_lo = neg_part(base);
    const MatInterval<double> bounds = effective_jacobian_bounds(model, transform);

    VerificationReport report;
    report.residuals["ups_sandwich"] =
        std::max(worst_negative(base + ups_lo), worst_negative(ups_hi - base));
    report.residuals["coupling_positivity"] = worst_negative(bounds.lo * ups_hi - bounds.hi * ups_lo + coupling);
    report.residuals["coupling_nonneg"] = worst_negative(coupling);
    for (const auto& [name, value] : report.residuals)
        report.checks[name] = value <= tol;
    return report;
}

SynthesisGrid SynthesisGrid::defaults() {
    SynthesisGrid grid;
    for (int i = 1; i <= 19; ++i)
        grid.lambda.push_back(i / 20.0);
    for (int e = -3; e <= 3; ++e)
        grid.tau.push_back(std::pow(10.0, e));
    return grid;
}

std::string SynthesisResult::status() const {
    if (found())
        return "feasible";
    if (stats.infeasible == 0 && stats.numerical_failures > 0)
        return "numerical_failure";
    return "infeasible";
}

ObserverGains recover_gains(const SynthesisVariables& vars, const std::optional<TransformPair>& transform) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(vars.J);
    if (!lu.isInvertible())
        throw SynthesisError("J is singular; gains cannot be recovered");
    const Eigen::MatrixXd Jinv = lu.inverse();
    if (transform)
        return TransformedObserverGains{transform->Lambda, transform->S, transform->U, vars.K, Jinv * vars.W, vars.G};
    return DirectObserverGains{Jinv * vars.Y, vars.K, Jinv * vars.W, vars.G};
}

namespace {

struct GridCandidate {
    ObserverGains gains;
    Certificate certificate;
};

} // namespace

SynthesisResult grid_synthesize(const SystemModel& model, const SynthesisGrid& grid, const SynthesisMode& mode,
                                const SynthesisOptions& options) {
    if (grid.tau.empty() || grid.lambda.empty())
        throw SynthesisError("synthesis grids must be nonempty");
    for (double t : grid.tau)
        if (!(t > 0.0))
            throw SynthesisError("tau grid values must be positive");
    for (double l : grid.lambda)
        if (!(l >= 0.0 && l < 1.0))
            throw SynthesisError("lambda grid values must lie in [0, 1)");

    SynthesisResult result;
    std::optional<TransformPair> transform;
    if (const auto* t = std::get_if<TransformedSynthesis>(&mode))
        transform = make_transform(model.A(), model.C(), t->Lambda, t->S);
    else
        result.diagnostic = diagnose_direct(model.A(), model.C());

    const auto backend = options.backend ? options.backend : default_backend();

    auto attempt = [&](double tau, double lambda) -> std::optional<GridCandidate> {
        const FeasibilityProgram program =
            transform ? assemble_transformed(model, transform->Lambda, transform->S, tau, lambda, options.margins,
                                             options.injection_allowed)
                      : assemble_direct(model, tau, lambda, options.margins,
                                        DirectOptions{options.injection_allowed, std::nullopt, {}});
        const SolveResult solved = solve_feasibility(program, *backend);
        ++result.stats.solved;
        switch (solved.status) {
        case SolveStatus::Infeasible:
            ++result.stats.infeasible;
            return std::nullopt;
        case SolveStatus::NumericalFailure:
            ++result.stats.numerical_failures;
            return std::nullopt;
        case SolveStatus::Feasible:
            break;
        }
        ++result.stats.feasible;
        Certificate cert;
        cert.variables = extract_variables(program, solved.x);
        cert.tau = tau;
        cert.lambda = lambda;
        cert.transform = transform;
        ObserverGains gains = recover_gains(cert.variables, transform);
        const VerificationReport check = verify_certificate(model, gains, cert, options.tolerances);
        cert.residuals = check.residuals;
        cert.post_checks = check.checks;
        if (!check.all_ok()) {
            ++result.stats.rejected;
            return std::nullopt;
        }
        return GridCandidate{std::move(gains), std::move(cert)};
    };

    std::vector<double> lambdas = grid.lambda;
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

    // The matrix inequality only relaxes as lambda grows (P > 0), so a tau
    // that fails at the largest lambda fails at every lambda.
    const double lambda_max = lambdas.back();
    std::vector<double> live_tau;
    std::optional<GridCandidate> at_max;
    for (double tau : grid.tau) {
        const int failures_before = result.stats.numerical_failures;
        if (auto found = attempt(tau, lambda_max)) {
            live_tau.push_back(tau);
            if (options.selection == GridSelection::FirstFeasible) {
                result.gains = std::move(found->gains);
                result.certificate = std::move(found->certificate);
                return result;
            }
            if (!at_max || found->certificate.variables.gamma < at_max->certificate.variables.gamma)
                at_max = std::move(found);
        } else if (result.stats.numerical_failures > failures_before) {
            // A numerical failure cannot prune this tau.
            live_tau.push_back(tau);
        }
    }
    if (live_tau.empty())
        return result;

    for (double lambda : lambdas) {
        if (lambda == lambda_max)
            break;
        std::optional<GridCandidate> best;
        for (double tau : live_tau) {
            auto found = attempt(tau, lambda);
            if (found && (!best || found->certificate.variables.gamma < best->certificate.variables.gamma))
                best = std::move(found);
        }
        if (best) {
            result.gains = std::move(best->gains);
            result.certificate = std::move(best->certificate);
            return result;
        }
    }
    if (at_max) {
        result.gains = std::move(at_max->gains);
        result.certificate = std::move(at_max->certificate);
    }
    return result;
}

MaxAlphaResult max_alpha(const ModelFamily& family, bool injection_allowed, std::pair<double, double> bracket,
                         const SynthesisGrid& grid, SynthesisOptions options, double width) {
    auto [lo, hi] = bracket;
    if (!(lo < hi) || !(width > 0.0))
        throw SynthesisError("max_alpha needs lo < hi and a positive width");
    options.injection_allowed = injection_allowed;
    options.selection = GridSelection::FirstFeasible;

    MaxAlphaResult out;
    auto feasible = [&](double alpha) {
        const SynthesisResult r = grid_synthesize(family(alpha), grid, DirectSynthesis{}, options);
        out.stats.solved += r.stats.solved;
        out.stats.feasible += r.stats.feasible;
        out.stats.infeasible += r.stats.infeasible;
        out.stats.numerical_failures += r.stats.numerical_failures;
        out.stats.rejected += r.stats.rejected;
        out.history.emplace_back(alpha, r.found());
        return r.found();
    };

    if (!feasible(lo))
        throw SynthesisError("bracket does not straddle the feasibility boundary: infeasible at " + std::to_string(lo));
    if (feasible(hi))
        throw SynthesisError("bracket does not straddle the feasibility boundary: feasible at " + std::to_string(hi));
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    out.alpha = lo;
    out.infeasible_above = hi;
    return out;
}

} // namespace iobs
