#pragma once

// Dense matrix utilities and interval-analysis primitives.
//
// Everything here is templated on the scalar type and accepts any Eigen
// dense expression; results are returned as plain (evaluated) objects.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

#include "iobs/error.hpp"

namespace iobs {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultTol = 1e-9;

// Entrywise positive part: max(0, a_ij).
template <typename Derived>
[[nodiscard]] Mat<typename Derived::Scalar> pos_part(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    return a.cwiseMax(Scalar(0));
}

// Entrywise negative part, so that a = pos_part(a) - neg_part(a).
template <typename Derived>
[[nodiscard]] Mat<typename Derived::Scalar> neg_part(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    return (-a).cwiseMax(Scalar(0));
}

// Closed entrywise interval [lo, hi] of matrices of identical shape.
template <typename Scalar>
struct MatInterval {
    Mat<Scalar> lo;
    Mat<Scalar> hi;

    MatInterval() = default;

    MatInterval(Mat<Scalar> lower, Mat<Scalar> upper) : lo(std::move(lower)), hi(std::move(upper)) {
        if (lo.rows() != hi.rows() || lo.cols() != hi.cols())
            throw DimensionError("interval bounds have different shapes");
        if ((hi - lo).minCoeff() < Scalar(0))
            throw Error("interval lower bound exceeds upper bound");
    }

    [[nodiscard]] Eigen::Index rows() const { return lo.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return lo.cols(); }

    [[nodiscard]] Mat<Scalar> width() const { return hi - lo; }

    template <typename Derived>
    [[nodiscard]] bool contains(const Eigen::MatrixBase<Derived>& m, Scalar tol = Scalar(0)) const {
        return m.rows() == rows() && m.cols() == cols() && (m - lo).minCoeff() >= -tol &&
               (hi - m).minCoeff() >= -tol;
    }
};

namespace detail {

template <typename A, typename B>
void require_product_shapes(const A& a, const B& b, const char* what) {
    if (a.cols() != b.rows())
        throw DimensionError(std::string(what) + ": inner dimensions " + std::to_string(a.cols()) +
                             " and " + std::to_string(b.rows()) + " differ");
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* what) {
    if (a.rows() != a.cols())
        throw DimensionError(std::string(what) + ": matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", expected square");
}

} // namespace detail

// Enclosure of {A B : lo <= B <= hi} using the positive/negative split of A.
template <typename Derived, typename Scalar = typename Derived::Scalar>
[[nodiscard]] MatInterval<Scalar> interval_product(const Eigen::MatrixBase<Derived>& a,
                                                   const MatInterval<Scalar>& b) {
    detail::require_product_shapes(a, b.lo, "interval_product");
    const Mat<Scalar> ap = pos_part(a);
    const Mat<Scalar> am = neg_part(a);
    return {ap * b.lo - am * b.hi, ap * b.hi - am * b.lo};
}

// Enclosure of {A B : -a_lo <= A <= a_hi, -b_lo <= B <= b_hi} for nonnegative
// bound matrices.
template <typename D1, typename D2, typename D3, typename D4>
[[nodiscard]] MatInterval<typename D1::Scalar> bilinear_bounds(const Eigen::MatrixBase<D1>& a_hi,
                                                               const Eigen::MatrixBase<D2>& a_lo,
                                                               const Eigen::MatrixBase<D3>& b_hi,
                                                               const Eigen::MatrixBase<D4>& b_lo) {
    using Scalar = typename D1::Scalar;
    if (a_hi.rows() != a_lo.rows() || a_hi.cols() != a_lo.cols() || b_hi.rows() != b_lo.rows() ||
        b_hi.cols() != b_lo.cols())
        throw DimensionError("bilinear_bounds: bound pairs have different shapes");
    detail::require_product_shapes(a_hi, b_hi, "bilinear_bounds");
    if (a_hi.minCoeff() < Scalar(0) || a_lo.minCoeff() < Scalar(0) || b_hi.minCoeff() < Scalar(0) ||
        b_lo.minCoeff() < Scalar(0))
        throw Error("bilinear_bounds: bound matrices must be entrywise nonnegative");
    return {-(a_lo * b_hi) - a_hi * b_lo, a_hi * b_hi + a_lo * b_lo};
}

// Eigenvalues from a full (non-symmetric) decomposition.
template <typename Derived>
[[nodiscard]] std::vector<std::complex<typename Derived::Scalar>> eigenvalues(
    const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    detail::require_square(a, "eigenvalues");
    std::vector<std::complex<Scalar>> out;
    if (a.rows() == 0)
        return out;
    Eigen::EigenSolver<Mat<Scalar>> solver(a.eval(), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw EigenFailure("eigenvalue iteration did not converge");
    const auto& values = solver.eigenvalues();
    out.assign(values.data(), values.data() + values.size());
    return out;
}

template <typename Derived>
[[nodiscard]] typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Scalar rho(0);
    for (const auto& ev : eigenvalues(a))
        rho = std::max(rho, std::abs(ev));
    return rho;
}

// Schur stability with a safety band: rho(A) < 1 - tol.
template <typename Derived>
[[nodiscard]] bool is_schur(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar tol = 0) {
    return spectral_radius(a) < typename Derived::Scalar(1) - tol;
}

template <typename Derived>
[[nodiscard]] bool is_nonneg(const Eigen::MatrixBase<Derived>& a,
                             typename Derived::Scalar tol = kDefaultTol) {
    return a.size() == 0 || a.minCoeff() >= -tol;
}

// Sign pattern of an M-matrix: strictly positive diagonal, nonpositive
// off-diagonal entries (within tol).
template <typename Derived>
[[nodiscard]] bool is_mmatrix_structure(const Eigen::MatrixBase<Derived>& a,
                                        typename Derived::Scalar tol = kDefaultTol) {
    detail::require_square(a, "is_mmatrix_structure");
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i == j && !(a(i, j) > 0))
                return false;
            if (i != j && a(i, j) > tol)
                return false;
        }
    return true;
}

template <typename D1, typename D2, typename D3, typename D4>
[[nodiscard]] Mat<typename D1::Scalar> block2x2(const Eigen::MatrixBase<D1>& a,
                                                const Eigen::MatrixBase<D2>& b,
                                                const Eigen::MatrixBase<D3>& c,
                                                const Eigen::MatrixBase<D4>& d) {
    if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols())
        throw DimensionError("block2x2: incompatible block shapes");
    Mat<typename D1::Scalar> out(a.rows() + c.rows(), a.cols() + b.cols());
    out << a, b, c, d;
    return out;
}

// [[M, N], [N, M]], the symmetric block pattern shared by the error-dynamics
// matrices.
template <typename D1, typename D2>
[[nodiscard]] Mat<typename D1::Scalar> mirror_blocks(const Eigen::MatrixBase<D1>& diag,
                                                     const Eigen::MatrixBase<D2>& off) {
    return block2x2(diag, off, off, diag);
}

// Largest eigenvalue of the symmetric part of a square matrix.
template <typename Derived>
[[nodiscard]] typename Derived::Scalar max_sym_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    detail::require_square(a, "max_sym_eigenvalue");
    const Mat<Scalar> sym = (a + a.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw EigenFailure("symmetric eigenvalue iteration did not converge");
    return solver.eigenvalues().maxCoeff();
}

template <typename Derived>
[[nodiscard]] typename Derived::Scalar min_sym_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
    return -max_sym_eigenvalue(-a);
}

} // namespace iobs
