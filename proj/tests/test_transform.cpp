#include <doctest.h>

#include <random>

#include "iobs/error.hpp"
#include "iobs/experiments.hpp"
#include "iobs/transform.hpp"
#include "oracles.hpp"

using namespace iobs;
using Eigen::MatrixXd;

namespace {

MatrixXd pendulum_A(double h = 0.065) {
    MatrixXd A(2, 2);
    A << 1, h, 0, 1;
    return A;
}

MatrixXd row(double a, double b) {
    MatrixXd r(1, 2);
    r << a, b;
    return r;
}

MatrixXd col(double a, double b) {
    MatrixXd c(2, 1);
    c << a, b;
    return c;
}

} // namespace

TEST_CASE("column-zero diagnostic") {
    const auto pend = diagnose_direct(pendulum_A(), row(1, 0));
    REQUIRE(pend.flagged.size() == 1);
    CHECK(pend.flagged[0].index == 1);
    CHECK(pend.flagged[0].value == 1.0);
    CHECK(pend.direct_infeasible());
    CHECK(pend.describe().find("1") != std::string::npos);

    const auto full = diagnose_direct(0.5 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
    CHECK(full.fixed.empty());
    CHECK_FALSE(full.direct_infeasible());

    MatrixXd A(2, 2);
    A << -1.5, 0, 0, 0;
    const auto neg = diagnose_direct(A, row(0, 1));
    REQUIRE(neg.flagged.size() == 1);
    CHECK(neg.flagged[0].index == 0);
    CHECK(neg.flagged[0].value == -1.5);

    // A fixed diagonal inside (-1, 1) is reported but not flagged.
    A << 0.3, 0, 0, 2;
    const auto inside = diagnose_direct(A, row(0, 1));
    CHECK(inside.fixed.size() == 1);
    CHECK_FALSE(inside.direct_infeasible());

    CHECK_THROWS_AS((void)diagnose_direct(A, MatrixXd::Ones(1, 3)), DimensionError);
}

TEST_CASE("eigenvector transformation for the pendulum") {
    const MatrixXd Lambda = col(0.9, 0.5);
    const auto t = build_transform(pendulum_A(), row(1, 0), Lambda);
    // Eigenvalues of [[0.1, 0.065], [-0.5, 1]] are the roots of s^2 - 1.1 s + 0.1325.
    const double disc = std::sqrt(1.1 * 1.1 - 4 * 0.1325);
    CHECK(t.aleph(0, 0) == doctest::Approx((1.1 - disc) / 2).epsilon(1e-10));
    CHECK(t.aleph(1, 1) == doctest::Approx((1.1 + disc) / 2).epsilon(1e-10));
    CHECK(t.aleph(0, 0) == doctest::Approx(0.13769).epsilon(1e-4));
    CHECK(t.aleph(1, 1) == doctest::Approx(0.96231).epsilon(1e-4));
    CHECK(std::abs(t.aleph(0, 1)) < 1e-12);
    CHECK(std::abs(t.aleph(1, 0)) < 1e-12);
    CHECK(oracle::max_abs(t.S * t.U - MatrixXd::Identity(2, 2)) < 1e-10);
    CHECK(check_assumption3(pendulum_A(), row(1, 0), Lambda, t.S).holds);

    // Same rows as the reference S up to positive scaling.
    const MatrixXd ref = pendulum_reference_S();
    for (int i = 0; i < 2; ++i) {
        const double scale = t.S(i, 0) / ref(i, 0);
        CHECK(scale > 0.0);
        CHECK(oracle::max_abs(t.S.row(i) / scale - ref.row(i)) < 1e-3);
    }
}

TEST_CASE("already diagonal pairs keep the identity") {
    MatrixXd A(2, 2);
    A << -0.4, 0, 0, 0.2;
    const auto t = build_transform(A, row(1, 1), col(0, 0));
    CHECK(oracle::max_abs(t.S - MatrixXd::Identity(2, 2)) < 1e-12);
}

TEST_CASE("unsupported spectra are rejected") {
    MatrixXd rot(2, 2);
    rot << 0, -0.5, 0.5, 0;
    CHECK_THROWS_WITH_AS((void)build_transform(rot, row(1, 0), col(0, 0)), "complex eigenvalues: supply S",
                         TransformError);
    CHECK_THROWS_WITH_AS((void)build_transform(0.5 * MatrixXd::Identity(2, 2), row(1, 0), col(0, 0)),
                         "repeated eigenvalues: supply S", TransformError);
    // Real eigenvalues outside the unit disc violate the assumption.
    MatrixXd unstable(2, 2);
    unstable << 1.5, 0, 0, 0.2;
    CHECK_THROWS_AS((void)build_transform(unstable, row(0, 1), col(0, 0)), TransformError);
}

TEST_CASE("assumption check") {
    const MatrixXd A = pendulum_A();
    const MatrixXd C = row(1, 0);
    const auto reference = check_assumption3(A, C, col(0.9, 0.5), pendulum_reference_S());
    CHECK(reference.holds);
    CHECK(reference.spectral_radius == doctest::Approx(0.96231).epsilon(1e-4));

    // Schur but with a diagonal entry equal to 1.
    MatrixXd M(2, 2);
    M << 1, 1, -1, -0.5;
    const auto diag = check_assumption3(M, C, col(0, 0), MatrixXd::Identity(2, 2));
    CHECK(diag.schur);
    CHECK_FALSE(diag.diagonal_ok);
    CHECK_FALSE(diag.holds);

    const auto unstable = check_assumption3(1.01 * MatrixXd::Identity(2, 2) + MatrixXd::Ones(2, 2) * 0.1, C,
                                            col(0, 0), MatrixXd::Identity(2, 2));
    CHECK_FALSE(unstable.schur);
    CHECK_FALSE(unstable.holds);

    MatrixXd singular(2, 2);
    singular << 1, 2, 2, 4;
    CHECK_THROWS_AS((void)check_assumption3(A, C, col(0.9, 0.5), singular), TransformError);
    CHECK_THROWS_AS((void)make_transform(A, C, col(0.9, 0.5), singular), TransformError);
    CHECK_THROWS_AS((void)make_transform(M, C, col(0, 0), MatrixXd::Identity(2, 2)), TransformError);
}

TEST_CASE("similarity preserves the spectrum") {
    std::mt19937_64 rng(77);
    int built = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const MatrixXd A = oracle::uniform(rng, 3, 3, -0.6, 0.6);
        const MatrixXd C = oracle::uniform(rng, 1, 3, -1, 1);
        const MatrixXd Lambda = oracle::uniform(rng, 3, 1, -0.3, 0.3);
        const MatrixXd S = oracle::uniform(rng, 3, 3, -1, 1) + 2.0 * MatrixXd::Identity(3, 3);
        const auto report = check_assumption3(A, C, Lambda, S);
        const auto base = oracle::sorted_spectrum(A - Lambda * C);
        CHECK(oracle::spectrum_distance(oracle::sorted_spectrum(report.aleph), base) < 1e-8);
        try {
            const auto t = build_transform(A, C, Lambda);
            ++built;
            CHECK(check_assumption3(A, C, Lambda, t.S).holds);
            CHECK(oracle::spectrum_distance(oracle::sorted_spectrum(t.aleph), base) < 1e-8);
        } catch (const TransformError&) {
        }
    }
    CHECK(built > 50);
}

TEST_CASE("pole placement helper") {
    const MatrixXd A = pendulum_A();
    const MatrixXd C = row(1, 0);
    const MatrixXd L = place_observer_poles(A, C, {0.2, 0.6});
    auto spectrum = oracle::sorted_spectrum(A - L * C);
    CHECK(spectrum[0].real() == doctest::Approx(0.2));
    CHECK(spectrum[1].real() == doctest::Approx(0.6));
    CHECK_THROWS_AS((void)place_observer_poles(A, row(0, 1), {0.2, 0.6}), TransformError);
}
