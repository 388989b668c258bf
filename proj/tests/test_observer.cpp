#include <doctest.h>

#include <random>

#include "iobs/error.hpp"
#include "iobs/experiments.hpp"
#include "iobs/matops.hpp"
#include "iobs/observer.hpp"
#include "oracles.hpp"

using namespace iobs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd swap_dtilde() {
    MatrixXd d(2, 2);
    d << 0, 1, 1, 0;
    return d;
}

struct Certified {
    SystemModel model;
    ObserverGains gains;
    Certificate cert;
};

Certified certified(const SystemModel& model, const SynthesisMode& mode = DirectSynthesis{},
                    const SynthesisGrid& grid = SynthesisGrid::defaults()) {
    const auto result = grid_synthesize(model, grid, mode);
    REQUIRE(result.found());
    return {model, *result.gains, *result.certificate};
}

bool contains(const VectorXd& lo, const VectorXd& x, const VectorXd& hi, double tol = 1e-12) {
    return (x - lo).minCoeff() >= -tol && (hi - x).minCoeff() >= -tol;
}

DirectObserverGains random_direct(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
    return {oracle::uniform(rng, n, m, -1, 1), oracle::uniform(rng, n, m, -1, 1), oracle::uniform(rng, n, n, 0, 0.3),
            oracle::uniform(rng, n, n, 0, 0.3)};
}

} // namespace

TEST_CASE("linear plant: both laws reduce to the Luenberger update") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const MatrixXd A = oracle::uniform(rng, 3, 3, -1, 1);
        const MatrixXd C = oracle::uniform(rng, 2, 3, -1, 1);
        const MatrixXd Z = MatrixXd::Zero(3, 3);
        const SystemModel model(A, C, {}, Z, Z, VectorXd::Zero(3), VectorXd::Zero(3));
        const DirectObserverGains gains{oracle::uniform(rng, 3, 2, -1, 1), MatrixXd::Zero(3, 2), Z, Z};
        const VectorXd hi = oracle::uniform(rng, 3, 1, 0, 1);
        const VectorXd lo = -oracle::uniform(rng, 3, 1, 0, 1);
        const VectorXd y = oracle::uniform(rng, 2, 1, -1, 1);
        const auto next = step_direct(gains, model, hi, lo, y);
        CHECK(oracle::max_abs(next.upper - ((A - gains.L * C) * hi + gains.L * y)) < 1e-14);
        CHECK(oracle::max_abs(next.lower - ((A - gains.L * C) * lo + gains.L * y)) < 1e-14);
    }
}

TEST_CASE("collapsed intervals stay collapsed without disturbance width") {
    std::mt19937_64 rng(2);
    const SystemModel base = pendulum_model(0.065);
    const VectorXd w = oracle::uniform(rng, 2, 1, -0.01, 0.01);
    const SystemModel model = base.with_disturbance(w, w);
    for (int trial = 0; trial < 100; ++trial) {
        const auto gains = random_direct(rng, 2, 1);
        const VectorXd x = oracle::uniform(rng, 2, 1, -1, 1);
        const auto next = step_direct(gains, model, x, x, model.output(x));
        CHECK(oracle::max_abs(next.upper - next.lower) < 1e-15);
        CHECK(oracle::max_abs(next.upper - model.step(x, w)) < 1e-14);

        TransformedObserverGains t;
        t.Lambda = pendulum_lambda();
        t.S = pendulum_reference_S();
        t.U = t.S.inverse();
        t.H = oracle::uniform(rng, 2, 1, -1, 1);
        t.Phi = oracle::uniform(rng, 2, 2, 0, 0.3);
        t.Gamma = oracle::uniform(rng, 2, 2, 0, 0.3);
        const VectorXd z = t.S * x;
        const auto znext = step_transformed(t, model, z, z, model.output(x));
        CHECK(oracle::max_abs(znext.upper - znext.lower) < 1e-14);
        CHECK(oracle::max_abs(znext.upper - t.S * model.step(x, w)) < 1e-13);
    }
}

TEST_CASE("identity transformation matches the direct observer") {
    std::mt19937_64 rng(3);
    const SystemModel model = table1_model(swap_dtilde(), 0.4, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = random_direct(rng, 2, 1);
        TransformedObserverGains t{d.L, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), d.K, d.F, d.G};
        const VectorXd hi = oracle::uniform(rng, 2, 1, 0, 1);
        const VectorXd lo = -oracle::uniform(rng, 2, 1, 0, 1);
        const VectorXd y = oracle::uniform(rng, 1, 1, -1, 1);
        const auto a = step_direct(d, model, hi, lo, y);
        const auto b = step_transformed(t, model, hi, lo, y);
        CHECK(oracle::max_abs(a.upper - b.upper) < 1e-14);
        CHECK(oracle::max_abs(a.lower - b.lower) < 1e-14);
        CHECK(oracle::max_abs(injection_term(d, model, hi, lo, y) - injection_term(t, model, hi, lo, y)) < 1e-14);
    }
}

TEST_CASE("back-transformation") {
    const VectorXd hi = Eigen::Vector2d(1.0, 2.0);
    const VectorXd lo = Eigen::Vector2d(-0.5, 0.25);
    const auto same = back_transform(MatrixXd::Identity(2, 2), hi, lo);
    CHECK(same.upper == hi);
    CHECK(same.lower == lo);
    const auto flipped = back_transform(-MatrixXd::Identity(2, 2), hi, lo);
    CHECK(flipped.upper == -lo);
    CHECK(flipped.lower == -hi);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd U = oracle::uniform(rng, 3, 3, -2, 2);
        const VectorXd zlo = oracle::uniform(rng, 3, 1, -1, 0);
        const VectorXd zhi = zlo + oracle::uniform(rng, 3, 1, 0, 1);
        const auto box = back_transform(U, zhi, zlo);
        const auto init = init_transformed(U, zhi, zlo);
        CHECK(init.upper == box.upper);
        int outside = 0;
        for (int s = 0; s < 1000; ++s) {
            const VectorXd z = oracle::inside(rng, zlo, zhi);
            if (!contains(box.lower, U * z, box.upper, 1e-12))
                ++outside;
        }
        CHECK(outside == 0);
    }
}

TEST_CASE("one pendulum step contains the plant step") {
    const auto run = certified(pendulum_model(0.065),
                               TransformedSynthesis{pendulum_lambda(), pendulum_reference_S()});
    const auto& gains = std::get<TransformedObserverGains>(run.gains);
    std::mt19937_64 rng(5);
    const VectorXd r = VectorXd::Constant(2, 0.1);
    int outside = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const VectorXd x = oracle::uniform(rng, 2, 1, -0.5, 0.5);
        const VectorXd w = oracle::inside(rng, run.model.w_lo(), run.model.w_hi());
        const auto z0 = init_transformed(gains.S, x + r, x - r);
        const auto z1 = step_transformed(gains, run.model, z0.upper, z0.lower, run.model.output(x));
        const auto box = back_transform(gains.U, z1.upper, z1.lower);
        if (!contains(box.lower, run.model.step(x, w), box.upper, 1e-12))
            ++outside;
    }
    CHECK(outside == 0);
}

TEST_CASE("zero disturbance from an exact initial state") {
    const auto run = certified(table1_model(swap_dtilde(), 0.2));
    const VectorXd x0 = Eigen::Vector2d(0.4, -0.3);
    SimulationOptions options;
    options.certificate = monitor_certificate(run.model, run.cert);
    const auto trace = simulate(run.model, run.gains, x0, x0, x0, 200, options);
    CHECK(trace.records.size() == 201);
    for (const auto& rec : trace.records) {
        CHECK(oracle::max_abs(rec.error) < 1e-12);
        CHECK(rec.positivity_ok);
        CHECK(rec.dqc_ok);
        CHECK(rec.lyapunov_ok);
    }
}

TEST_CASE("certified runs pass every monitor; a corrupted certificate does not") {
    const auto run = certified(table1_model(swap_dtilde(), 0.2, 0.05));
    const VectorXd x0 = Eigen::Vector2d(0.3, 0.1);
    const VectorXd r = VectorXd::Constant(2, 0.5);
    SimulationOptions options;
    options.certificate = monitor_certificate(run.model, run.cert);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        options.seed = seed;
        const auto trace = simulate(run.model, run.gains, x0, x0 + r, x0 - r, 1000, options);
        CHECK(trace.seed == seed);
        CHECK(trace.monitored);
        CHECK(trace.positivity_violations() == 0);
        CHECK(trace.dqc_violations() == 0);
        CHECK(trace.lyapunov_violations() == 0);
    }

    SimulationOptions corrupted = options;
    corrupted.certificate->P = MatrixXd::Identity(4, 4);
    corrupted.certificate->lambda = 0.0;
    corrupted.certificate->gamma = 0.0;
    const auto bad = simulate(run.model, run.gains, x0, x0 + r, x0 - r, 100, corrupted);
    CHECK(bad.lyapunov_violations() > 0);
    CHECK(bad.positivity_violations() == 0);

    // A sector matrix that ignores the nonlinearity is violated somewhere.
    SimulationOptions no_sector = options;
    no_sector.certificate->Psi = -MatrixXd::Identity(4, 4);
    CHECK(simulate(run.model, run.gains, x0, x0 + r, x0 - r, 100, no_sector).dqc_violations() > 0);
}

TEST_CASE("uncertified gains can lose containment") {
    const SystemModel model = table1_model(swap_dtilde(), 0.2, 0.05);
    // A - L C has negative entries, so the error dynamics are not order preserving.
    const DirectObserverGains bad{MatrixXd::Constant(2, 1, 2.5), MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 2),
                                  MatrixXd::Zero(2, 2)};
    const VectorXd x0 = Eigen::Vector2d(0.3, 0.1);
    const VectorXd r = VectorXd::Constant(2, 0.1);
    CHECK(simulate(model, bad, x0, x0 + r, x0 - r, 50).positivity_violations() > 0);
}

TEST_CASE("halving the disturbance box halves the long-run width of a linear observer") {
    MatrixXd A(2, 2);
    A << 0.6, 0.2, 0.1, 0.5;
    const MatrixXd C = (MatrixXd(1, 2) << 1, 0).finished();
    const MatrixXd Z = MatrixXd::Zero(2, 2);
    const VectorXd w = VectorXd::Constant(2, 0.1);
    const SystemModel full(A, C, {}, Z, Z, -w, w);
    const SystemModel half = full.with_disturbance(-w / 2, w / 2);
    const auto run = certified(full);
    const VectorXd x0 = Eigen::Vector2d(0.2, -0.1);
    const VectorXd r = VectorXd::Constant(2, 0.3);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimulationOptions options;
        options.seed = seed;
        const double a = simulate(full, run.gains, x0, x0 + r, x0 - r, 1000, options).ultimate_width();
        const double b = simulate(half, run.gains, x0, x0 + r, x0 - r, 1000, options).ultimate_width();
        CHECK(a > 0.0);
        CHECK(b <= 0.5 * a + 1e-9);
    }
}

TEST_CASE("initial interval must contain the initial state") {
    const auto run = certified(table1_model(swap_dtilde(), 0.2, 0.05));
    const VectorXd x0 = Eigen::Vector2d(0.3, 0.1);
    CHECK_THROWS_AS((void)simulate(run.model, run.gains, x0, x0 - VectorXd::Constant(2, 0.1), x0, 10),
                    SimulationError);
    CHECK_THROWS_AS((void)simulate(run.model, run.gains, x0, x0, x0, -1), SimulationError);
}

TEST_CASE("seeded simulations are reproducible") {
    const auto run = certified(table1_model(swap_dtilde(), 0.2, 0.05));
    const VectorXd x0 = Eigen::Vector2d(0.3, 0.1);
    const VectorXd r = VectorXd::Constant(2, 0.2);
    SimulationOptions options;
    options.seed = 9;
    const auto a = simulate(run.model, run.gains, x0, x0 + r, x0 - r, 100, options);
    const auto b = simulate(run.model, run.gains, x0, x0 + r, x0 - r, 100, options);
    options.seed = 10;
    const auto c = simulate(run.model, run.gains, x0, x0 + r, x0 - r, 100, options);
    CHECK(a.records.back().x == b.records.back().x);
    CHECK(a.records.back().upper == b.records.back().upper);
    CHECK(a.records.back().x != c.records.back().x);
    for (const auto& rec : a.records)
        if (rec.w.size() > 0)
            CHECK(contains(run.model.w_lo(), rec.w, run.model.w_hi(), 0.0));
}

TEST_CASE("sampled-data discretization") {
    const double h = 0.065;
    const SystemModel model = pendulum_model(h);
    CHECK(model.w_hi()[0] == doctest::Approx(std::sqrt(2.0) * h * h).epsilon(1e-14));
    CHECK(model.w_hi()[0] == doctest::Approx(0.005975).epsilon(1e-4));
    CHECK(model.w_lo() == -model.w_hi());
    MatrixXd A(2, 2);
    A << 1, h, 0, 1;
    CHECK(oracle::max_abs(model.A() - A) < 1e-15);

    SampledDataConfig linear;
    linear.A_c = MatrixXd::Zero(2, 2);
    linear.A_c(0, 0) = -1;
    linear.A_c(1, 1) = -2;
    linear.h = 0.1;
    const VectorXd x = Eigen::Vector2d(1.0, -2.0);
    const VectorXd exact = Eigen::Vector2d(std::exp(-0.1), -2.0 * std::exp(-0.2));
    CHECK(oracle::max_abs(integrate_truth(linear, x) - exact) < 1e-12);

    SampledDataConfig bad = linear;
    bad.h = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = linear;
    bad.truth_substeps = 5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("pendulum at rest stays at rest") {
    PendulumOptions options;
    options.x0 = VectorXd::Zero(2);
    options.horizon = 200;
    const auto run = run_pendulum(options);
    for (const auto& rec : run.trace.records) {
        CHECK(oracle::max_abs(rec.x) == 0.0);
        CHECK(contains(rec.lower, rec.x, rec.upper, 0.0));
    }
    CHECK(run.trace.defect_violations() == 0);
}

TEST_CASE("pendulum sampled-data run from the reference initial state") {
    PendulumOptions options;
    options.x0 = Eigen::Vector2d(0.5, 0.3);
    const auto run = run_pendulum(options);
    CHECK(run.trace.records.size() == 1001);
    CHECK(run.trace.transformed);
    CHECK(run.trace.defect_bound == doctest::Approx(std::sqrt(2.0) * 0.065 * 0.065));
    CHECK(run.trace.positivity_violations() == 0);
    CHECK(run.trace.defect_violations() == 0);
    CHECK(run.trace.dqc_violations() == 0);
    CHECK(run.trace.lyapunov_violations() == 0);
    for (const auto& rec : run.trace.records)
        CHECK(contains(rec.lower, rec.x, rec.upper, 1e-9));
    // Width settles well below its initial value.
    const double initial = (run.trace.records.front().upper - run.trace.records.front().lower).sum();
    CHECK(run.trace.ultimate_width() < initial);
    CHECK(run.trace.max_width().maxCoeff() < 1.0);
}
