#pragma once

// Feasibility programs for interval-observer synthesis, the (tau, lambda)
// grid search around them, gain recovery, and independent certificate
// checks.

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iobs/gains.hpp"
#include "iobs/matops.hpp"
#include "iobs/model.hpp"
#include "iobs/program.hpp"
#include "iobs/transform.hpp"

namespace iobs {

// Slack used to realize strict inequalities.
struct Margins {
    double eps_pos = 1e-6;  // J_ii >= eps_pos, gamma >= eps_pos
    double eps_pd = 1e-6;   // P >= eps_pd I
};

// Blocks pinned to constants instead of solved for.
struct PinnedBlocks {
    std::optional<Eigen::MatrixXd> injection;  // K or H
    std::optional<Eigen::MatrixXd> coupling;   // G or Gamma
    bool zero_W = false;                       // F = 0 (Phi = 0)
    // With a pinned injection gain, fix Ups_hi and Ups_lo at the positive and
    // negative parts of I - K C (U - H C U).
    bool tight_ups = false;
    bool diagonal_J = false;
};

struct DirectOptions {
    bool injection_allowed = true;
    // Fix L instead of solving for it (Y = J L).
    std::optional<Eigen::MatrixXd> fixed_L;
    PinnedBlocks pinned;
};

// Program in the plant's coordinates. Variables J, Y, K, W, Ups_lo, Ups_hi,
// G, P, gamma; constraints Q_nonneg, ups_lower, ups_upper, coupling_positivity,
// lmi and the structural sign constraints.
[[nodiscard]] FeasibilityProgram assemble_direct(const SystemModel& model, double tau, double lambda,
                                                 const Margins& margins = {}, const DirectOptions& options = {});

// Program in coordinates z = S x with Lambda fixed. Variables J, H, W,
// Ups_lo, Ups_hi, Gamma, P, gamma.
[[nodiscard]] FeasibilityProgram assemble_transformed(const SystemModel& model, const Eigen::MatrixXd& Lambda,
                                                      const Eigen::MatrixXd& S, double tau, double lambda,
                                                      const Margins& margins = {}, bool injection_allowed = true,
                                                      const PinnedBlocks& pinned = {});

// Solution of either program. In the transformed case K holds H, G holds
// Gamma and Y is empty.
struct SynthesisVariables {
    Eigen::MatrixXd J;
    Eigen::MatrixXd Y;
    Eigen::MatrixXd K;
    Eigen::MatrixXd W;
    Eigen::MatrixXd ups_lo;
    Eigen::MatrixXd ups_hi;
    Eigen::MatrixXd G;
    Eigen::MatrixXd P;
    double gamma = 0.0;
};

[[nodiscard]] SynthesisVariables extract_variables(const FeasibilityProgram& program, const Eigen::VectorXd& x);

struct DirectSynthesis {};
struct TransformedSynthesis {
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd S;
};
using SynthesisMode = std::variant<DirectSynthesis, TransformedSynthesis>;

struct Certificate {
    SynthesisVariables variables;
    double tau = 0.0;
    double lambda = 0.0;
    // Present for observers in transformed coordinates.
    std::optional<TransformPair> transform;
    std::map<std::string, double> residuals;
    std::map<std::string, bool> post_checks;

    [[nodiscard]] bool transformed() const { return transform.has_value(); }
    [[nodiscard]] bool accepted() const;
};

// (Theta_lo, Theta_hi) enclosing S D for every D_lo <= D <= D_hi.
[[nodiscard]] MatInterval<double> theta_bounds(const Eigen::MatrixXd& S, const Eigen::MatrixXd& D_lo,
                                               const Eigen::MatrixXd& D_hi);

// Jacobian bounds seen by the observer: (D_lo, D_hi) directly, Theta bounds
// after a transformation.
[[nodiscard]] MatInterval<double> effective_jacobian_bounds(const SystemModel& model,
                                                            const std::optional<TransformPair>& transform);

// Sector matrix Psi of the incremental quadratic constraint.
[[nodiscard]] Eigen::MatrixXd psi_matrix(const MatInterval<double>& bounds, const Eigen::MatrixXd& ups_lo,
                                         const Eigen::MatrixXd& ups_hi, const Eigen::MatrixXd& G);

// Error-dynamics matrix [[M + F, F], [F, M + F]] with M = A - L C
// (or aleph in transformed coordinates).
[[nodiscard]] Eigen::MatrixXd error_dynamics_matrix(const ObserverGains& gains, const SystemModel& model);

// Numeric value of the 8n x 8n matrix inequality (required <= 0).
[[nodiscard]] Eigen::MatrixXd assembled_lmi(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Psi,
                                            const Eigen::MatrixXd& J, const Eigen::MatrixXd& P, double tau,
                                            double lambda, double gamma);

struct VerifyTolerances {
    double entrywise = 1e-7;     // residuals of the linear inequalities
    double nonneg = 1e-8;        // error-dynamics matrix and J^{-1}
    double lmi = 1e-7;           // largest eigenvalue of the assembled LMI
    double consistency = 1e-8;   // gains vs. certificate, two constructions of the dynamics matrix
};

struct VerificationReport {
    std::map<std::string, double> residuals;
    std::map<std::string, bool> checks;
    [[nodiscard]] bool all_ok() const;
};

// Recompute every property from the raw matrices; solver status is never
// consulted.
[[nodiscard]] VerificationReport verify_certificate(const SystemModel& model, const ObserverGains& gains,
                                                    const Certificate& cert, const VerifyTolerances& tol = {});

// Check of the injection constraints alone for given (K, G) or (H, Gamma),
// using the tightest Ups_hi = (I - K C)^+, Ups_lo = (I - K C)^- (U - H C U
// in transformed coordinates). Residuals "ups_sandwich" and
// "coupling_positivity" are worst violations.
[[nodiscard]] VerificationReport check_injection_constraints(const SystemModel& model,
                                                             const std::optional<TransformPair>& transform,
                                                             const Eigen::MatrixXd& injection,
                                                             const Eigen::MatrixXd& coupling, double tol = 1e-6);

struct SynthesisGrid {
    std::vector<double> tau;
    std::vector<double> lambda;

    // lambda in {0.05, ..., 0.95}, tau in {1e-3, ..., 1e3}.
    [[nodiscard]] static SynthesisGrid defaults();
};

enum class GridSelection {
    SmallestLambda,  // smallest feasible lambda, ties broken by smallest gamma
    FirstFeasible,   // stop at the first verified point (feasibility queries)
};

struct SynthesisOptions {
    Margins margins;
    bool injection_allowed = true;
    GridSelection selection = GridSelection::SmallestLambda;
    VerifyTolerances tolerances;
    std::shared_ptr<const FeasibilityBackend> backend;  // default_backend() when null
};

struct GridStats {
    int solved = 0;
    int feasible = 0;
    int infeasible = 0;
    int numerical_failures = 0;
    int rejected = 0;  // solver said feasible but verification failed
};

struct SynthesisResult {
    std::optional<ObserverGains> gains;
    std::optional<Certificate> certificate;
    GridStats stats;
    std::optional<DirectDiagnostic> diagnostic;

    [[nodiscard]] bool found() const { return gains.has_value(); }
    // "feasible", "infeasible" or "numerical_failure".
    [[nodiscard]] std::string status() const;
};

// Gains from a solution: L = J^{-1} Y, F = J^{-1} W (or Phi = J^{-1} W).
[[nodiscard]] ObserverGains recover_gains(const SynthesisVariables& vars,
                                          const std::optional<TransformPair>& transform);

[[nodiscard]] SynthesisResult grid_synthesize(const SystemModel& model, const SynthesisGrid& grid,
                                              const SynthesisMode& mode = DirectSynthesis{},
                                              const SynthesisOptions& options = {});

using ModelFamily = std::function<SystemModel(double alpha)>;

struct MaxAlphaResult {
    double alpha = 0.0;             // largest value shown feasible
    double infeasible_above = 0.0;  // smallest value shown infeasible
    std::vector<std::pair<double, bool>> history;
    GridStats stats;
};

// Bisection on the scale of the Jacobian bounds until the bracket is
// narrower than `width`. Feasibility must hold at bracket.first and fail at
// bracket.second.
[[nodiscard]] MaxAlphaResult max_alpha(const ModelFamily& family, bool injection_allowed,
                                       std::pair<double, double> bracket, const SynthesisGrid& grid,
                                       SynthesisOptions options = {}, double width = 5e-3);

} // namespace iobs
