#pragma once

// Coordinate transformations z = S x for interval observers, and the
// structural test that rules out observers in the original coordinates.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace iobs {

// Lambda, S, U = S^{-1} and aleph = S (A - Lambda C) U.
struct TransformPair {
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd S;
    Eigen::MatrixXd U;
    Eigen::MatrixXd aleph;
};

struct FixedDiagonal {
    Eigen::Index index = 0;  // zero-based state index
    double value = 0.0;      // (A - L C)_ii, identical for every L
};

// Result of the column-zero test. Sound but not complete: a flag proves that
// no L makes every (A - L C)_ii lie in (-1, 1); no flag proves nothing.
struct DirectDiagnostic {
    std::vector<FixedDiagonal> fixed;    // every state whose C column is zero
    std::vector<FixedDiagonal> flagged;  // those whose fixed value is outside (-1, 1)

    [[nodiscard]] bool direct_infeasible() const { return !flagged.empty(); }
    [[nodiscard]] std::string describe() const;
};

[[nodiscard]] DirectDiagnostic diagnose_direct(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

struct Assumption3Report {
    bool holds = false;
    bool schur = false;
    bool diagonal_ok = false;
    double spectral_radius = 0.0;
    Eigen::MatrixXd aleph;
    std::string reason;
};

// aleph = S (A - Lambda C) S^{-1} must be Schur with every diagonal entry in
// (-1, 1) (tolerance 1e-9). Throws TransformError for singular S.
[[nodiscard]] Assumption3Report check_assumption3(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                                  const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& S);

// Validated pair from a user-supplied S.
[[nodiscard]] TransformPair make_transform(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                           const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& S);

// S from the eigendecomposition of A - Lambda C: eigenvalues ascending, unit
// eigenvectors with their largest-magnitude entry positive, S = V^{-1}.
// Rejects complex or repeated eigenvalues and pairs violating the
// assumption.
[[nodiscard]] TransformPair build_transform(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                            const Eigen::MatrixXd& Lambda);

// Single-output observer gain placing the eigenvalues of A - Lambda C at the
// given real poles (Ackermann's formula on the dual pair).
[[nodiscard]] Eigen::MatrixXd place_observer_poles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                                   const std::vector<double>& poles);

// Condition number above which S is treated as singular.
inline constexpr double kSingularCondition = 1e12;

} // namespace iobs
