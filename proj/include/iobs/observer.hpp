#pragma once

// Interval observers in plant coordinates and in transformed coordinates
// z = S x, their simulation against a plant, and runtime monitors for
// positivity of the error, the incremental quadratic constraint and the
// Lyapunov decrease certified by a synthesis run.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "iobs/gains.hpp"
#include "iobs/model.hpp"
#include "iobs/synthesis.hpp"

namespace iobs {

struct IntervalState {
    Eigen::VectorXd upper;
    Eigen::VectorXd lower;
};

// One step of the observer in plant coordinates.
[[nodiscard]] IntervalState step_direct(const DirectObserverGains& gains, const SystemModel& model,
                                        const Eigen::VectorXd& upper, const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& y);

// One step in z coordinates.
[[nodiscard]] IntervalState step_transformed(const TransformedObserverGains& gains, const SystemModel& model,
                                             const Eigen::VectorXd& upper, const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& y);

// x bounds from z bounds: upper = U+ z_hi - U- z_lo, lower = U+ z_lo - U- z_hi.
[[nodiscard]] IntervalState back_transform(const Eigen::MatrixXd& U, const Eigen::VectorXd& upper,
                                           const Eigen::VectorXd& lower);
// z bounds from x bounds (same rule with S).
[[nodiscard]] IntervalState init_transformed(const Eigen::MatrixXd& S, const Eigen::VectorXd& upper,
                                             const Eigen::VectorXd& lower);

// Nonlinear injection term pi(x1, x2, y) = p((I - K C) x1 + K y) + G (x1 - x2).
[[nodiscard]] Eigen::VectorXd injection_term(const DirectObserverGains& gains, const SystemModel& model,
                                             const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                             const Eigen::VectorXd& y);
// pi~(z1, z2, y) = S p((U - H C U) z1 + H y) + Gamma (z1 - z2).
[[nodiscard]] Eigen::VectorXd injection_term(const TransformedObserverGains& gains, const SystemModel& model,
                                             const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                             const Eigen::VectorXd& y);

struct MonitorTolerances {
    double positivity = 1e-9;
    // Quadratic monitors. The Lyapunov slack scales with max(1, |v|^2), v the
    // stacked (error, next error, nonlinearity, disturbance) vector.
    double quadratic = 1e-7;
};

// Certificate data the quadratic monitors need.
struct MonitorCertificate {
    Eigen::MatrixXd P;
    Eigen::MatrixXd Psi;
    double lambda = 0.0;
    double gamma = 0.0;
};

[[nodiscard]] MonitorCertificate monitor_certificate(const SystemModel& model, const Certificate& cert);

struct TraceRecord {
    int k = 0;
    Eigen::VectorXd x;
    Eigen::VectorXd upper;  // plant coordinates
    Eigen::VectorXd lower;
    Eigen::VectorXd z_upper;  // transformed runs only
    Eigen::VectorXd z_lower;
    Eigen::VectorXd w;  // disturbance applied from k to k + 1 (empty on the last record)
    // Error in the observer's coordinates and the measured increments of the
    // transition k -> k + 1.
    Eigen::VectorXd error;
    Eigen::VectorXd delta_p;
    Eigen::VectorXd delta_w;
    double min_error = 0.0;
    double V = 0.0;
    double dqc = 0.0;              // (Psi e - dp)^T dp
    double lyapunov_excess = 0.0;  // V+ - lambda V - gamma |dw|^2
    double defect = 0.0;           // sampled-data runs: |truth - Euler|
    bool positivity_ok = true;
    bool dqc_ok = true;
    bool lyapunov_ok = true;
    bool defect_ok = true;
};

struct ObserverTrace {
    std::uint64_t seed = 0;
    bool transformed = false;
    bool monitored = false;
    double defect_bound = 0.0;  // sampled-data runs only, else 0
    std::vector<TraceRecord> records;

    [[nodiscard]] int positivity_violations() const;
    [[nodiscard]] int dqc_violations() const;
    [[nodiscard]] int lyapunov_violations() const;
    [[nodiscard]] int defect_violations() const;
    // Largest componentwise width over the trace.
    [[nodiscard]] Eigen::VectorXd max_width() const;
    // Mean of the summed width over the last 20% of the records.
    [[nodiscard]] double ultimate_width() const;
};

struct SimulationOptions {
    std::uint64_t seed = 1;
    std::optional<MonitorCertificate> certificate;
    MonitorTolerances tolerances;
};

// Simulate the plant with w[k] drawn uniformly from [w_lo, w_hi] (seeded) and
// run the observer alongside. Throws SimulationError unless
// lower0 <= x0 <= upper0.
[[nodiscard]] ObserverTrace simulate(const SystemModel& model, const ObserverGains& gains, const Eigen::VectorXd& x0,
                                     const Eigen::VectorXd& upper0, const Eigen::VectorXd& lower0, int horizon,
                                     const SimulationOptions& options = {});

// Sampled continuous-time plant dx/dt = A_c x + p_c(x), discretized by the
// forward Euler rule x+ = (I + h A_c) x + h p_c(x) + w with |w| <= h rho(h).
struct SampledDataConfig {
    Eigen::MatrixXd A_c;
    NonlinearitySpec p_c;
    double h = 0.065;
    std::function<double(double)> rho = [](double h) { return std::sqrt(2.0) * h; };
    int truth_substeps = 50;

    void validate() const;
};

// Registry spec for h p_c.
[[nodiscard]] NonlinearitySpec scale_nonlinearity(const NonlinearitySpec& spec, double h);

// Discrete model with A = I + h A_c, p = h p_c, Jacobian bounds h [Dc_lo,
// Dc_hi] and w_hi = -w_lo = h rho(h) 1.
[[nodiscard]] SystemModel discretize(const SampledDataConfig& config, const Eigen::MatrixXd& C,
                                     const Eigen::MatrixXd& Dc_lo, const Eigen::MatrixXd& Dc_hi,
                                     std::optional<Region> region = std::nullopt);

// One sample interval of the continuous plant by classical RK4.
[[nodiscard]] Eigen::VectorXd integrate_truth(const SampledDataConfig& config, const Eigen::VectorXd& x);

// The true state advances by RK4; the observer is stepped once per sample.
// The per-sample Euler defect is recorded and checked against h rho(h);
// violations are counted in the trace and invalidate the run.
[[nodiscard]] ObserverTrace simulate_sampled(const SampledDataConfig& config, const SystemModel& model,
                                             const ObserverGains& gains, const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& upper0, const Eigen::VectorXd& lower0,
                                             int horizon, const SimulationOptions& options = {});

} // namespace iobs
