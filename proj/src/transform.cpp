#include "iobs/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "iobs/error.hpp"
#include "iobs/matops.hpp"

namespace iobs {

namespace {

constexpr double kDiagTol = 1e-9;

void require_pair_shapes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, const Eigen::MatrixXd& Lambda) {
    if (A.rows() != A.cols())
        throw DimensionError("A must be square");
    if (C.cols() != A.rows())
        throw DimensionError("C must have as many columns as A");
    if (Lambda.rows() != A.rows() || Lambda.cols() != C.rows())
        throw DimensionError("Lambda must be n x m");
}

double condition_number(const Eigen::MatrixXd& S) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] == 0.0)
        return std::numeric_limits<double>::infinity();
    return sv[0] / sv[sv.size() - 1];
}

} // namespace

std::string DirectDiagnostic::describe() const {
    std::ostringstream os;
    if (flagged.empty()) {
        os << "no diagonal entry of A - L C is fixed outside (-1, 1)";
        return os.str();
    }
    os << "direct synthesis infeasible: ";
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (i)
            os << "; ";
        os << "(A - L C)_" << flagged[i].index + 1 << flagged[i].index + 1 << " = " << flagged[i].value
           << " for every L";
    }
    return os.str();
}

DirectDiagnostic diagnose_direct(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
    if (A.rows() != A.cols() || C.cols() != A.rows())
        throw DimensionError("diagnose_direct: inconsistent A, C");
    DirectDiagnostic report;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (!C.col(i).isZero(0.0))
            continue;
        const FixedDiagonal entry{i, A(i, i)};
        report.fixed.push_back(entry);
        if (!(std::abs(entry.value) < 1.0))
            report.flagged.push_back(entry);
    }
    return report;
}

Assumption3Report check_assumption3(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                    const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& S) {
    require_pair_shapes(A, C, Lambda);
    if (S.rows() != A.rows() || S.cols() != A.cols())
        throw DimensionError("S must be n x n");
    if (condition_number(S) > kSingularCondition)
        throw TransformError("S is singular (condition number above 1e12)");

    Assumption3Report report;
    const Eigen::MatrixXd U = S.inverse();
    report.aleph = S * (A - Lambda * C) * U;
    // Rounding noise of the similarity product; exact zeros matter to the
    // entrywise constraints downstream.
    const double noise = 1e-14 * std::max(1.0, report.aleph.cwiseAbs().maxCoeff());
    report.aleph = (report.aleph.array().abs() < noise).select(0.0, report.aleph);
    report.spectral_radius = spectral_radius(report.aleph);
    report.schur = report.spectral_radius < 1.0 - kDiagTol;
    report.diagonal_ok = (report.aleph.diagonal().array().abs() < 1.0 - kDiagTol).all();
    report.holds = report.schur && report.diagonal_ok;
    if (!report.schur)
        report.reason = "S (A - Lambda C) U is not Schur (spectral radius " + std::to_string(report.spectral_radius) + ")";
    else if (!report.diagonal_ok)
        report.reason = "a diagonal entry of S (A - Lambda C) U lies outside (-1, 1)";
    return report;
}

TransformPair make_transform(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, const Eigen::MatrixXd& Lambda,
                             const Eigen::MatrixXd& S) {
    const Assumption3Report report = check_assumption3(A, C, Lambda, S);
    if (!report.holds)
        throw TransformError("transformation rejected: " + report.reason);
    return {Lambda, S, S.inverse(), report.aleph};
}

TransformPair build_transform(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, const Eigen::MatrixXd& Lambda) {
    require_pair_shapes(A, C, Lambda);
    const Eigen::MatrixXd closed = A - Lambda * C;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(closed);
    if (solver.info() != Eigen::Success)
        throw EigenFailure("eigendecomposition of A - Lambda C did not converge");

    const auto n = closed.rows();
    const double scale = std::max(1.0, closed.norm());
    const auto& values = solver.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(values[i].imag()) > 1e-10 * scale)
            throw TransformError("complex eigenvalues: supply S");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return values[a].real() < values[b].real(); });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (values[order[i]].real() - values[order[i - 1]].real() < 1e-9 * scale)
            throw TransformError("repeated eigenvalues: supply S");

    Eigen::MatrixXd V(n, n);
    const Eigen::MatrixXd vectors = solver.eigenvectors().real();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::VectorXd v = vectors.col(order[static_cast<std::size_t>(c)]);
        v.normalize();
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v[pivot] < 0.0)
            v = -v;
        V.col(c) = v;
    }
    return make_transform(A, C, Lambda, V.inverse());
}

Eigen::MatrixXd place_observer_poles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                     const std::vector<double>& poles) {
    const auto n = A.rows();
    if (A.cols() != n || C.cols() != n)
        throw DimensionError("place_observer_poles: inconsistent A, C");
    if (C.rows() != 1)
        throw TransformError("pole placement helper supports single-output systems only");
    if (static_cast<Eigen::Index>(poles.size()) != n)
        throw DimensionError("place_observer_poles: need one pole per state");

    // Observability matrix O = [C; C A; ...; C A^{n-1}].
    Eigen::MatrixXd O(n, n);
    Eigen::MatrixXd row = C;
    for (Eigen::Index i = 0; i < n; ++i) {
        O.row(i) = row;
        row = row * A;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(O);
    if (!lu.isInvertible())
        throw TransformError("pair (A, C) is not observable");

    // Desired characteristic polynomial evaluated at A.
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    for (double pole : poles)
        phi = phi * (A - pole * Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd e_last = Eigen::VectorXd::Zero(n);
    e_last[n - 1] = 1.0;
    return phi * lu.solve(e_last);
}

} // namespace iobs
