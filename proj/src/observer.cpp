#include "iobs/observer.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "iobs/error.hpp"
#include "iobs/matops.hpp"

namespace iobs {

void validate_gains(const ObserverGains& gains, const SystemModel& model, double tol) {
    const Eigen::Index n = model.n();
    const Eigen::Index m = model.m();
    auto shape = [](const Eigen::MatrixXd& a, Eigen::Index r, Eigen::Index c, const char* name) {
        if (a.rows() != r || a.cols() != c)
            throw DimensionError(std::string(name) + " is " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + ", expected " + std::to_string(r) + "x" +
                                 std::to_string(c));
    };
    if (const auto* d = std::get_if<DirectObserverGains>(&gains)) {
        shape(d->L, n, m, "L");
        shape(d->K, n, m, "K");
        shape(d->F, n, n, "F");
        shape(d->G, n, n, "G");
        if (!is_nonneg(d->F, tol) || !is_nonneg(d->G, tol))
            throw Error("coupling matrices F and G must be entrywise nonnegative");
        return;
    }
    const auto& t = std::get<TransformedObserverGains>(gains);
    shape(t.Lambda, n, m, "Lambda");
    shape(t.S, n, n, "S");
    shape(t.U, n, n, "U");
    shape(t.H, n, m, "H");
    shape(t.Phi, n, n, "Phi");
    shape(t.Gamma, n, n, "Gamma");
    if (!is_nonneg(t.Phi, tol) || !is_nonneg(t.Gamma, tol))
        throw Error("coupling matrices Phi and Gamma must be entrywise nonnegative");
    if (std::isfinite(tol) && ((t.S * t.U - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8))
        throw Error("S U must be the identity");
}

Eigen::VectorXd injection_term(const DirectObserverGains& gains, const SystemModel& model, const Eigen::VectorXd& x1,
                               const Eigen::VectorXd& x2, const Eigen::VectorXd& y) {
    const Eigen::VectorXd arg = x1 - gains.K * (model.C() * x1) + gains.K * y;
    return model.p(arg) + gains.G * (x1 - x2);
}

Eigen::VectorXd injection_term(const TransformedObserverGains& gains, const SystemModel& model,
                               const Eigen::VectorXd& z1, const Eigen::VectorXd& z2, const Eigen::VectorXd& y) {
    const Eigen::VectorXd u = gains.U * z1;
    const Eigen::VectorXd arg = u - gains.H * (model.C() * u) + gains.H * y;
    return gains.S * model.p(arg) + gains.Gamma * (z1 - z2);
}

IntervalState step_direct(const DirectObserverGains& gains, const SystemModel& model, const Eigen::VectorXd& upper,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd M = model.A() - gains.L * model.C();
    const Eigen::VectorXd Ly = gains.L * y;
    const Eigen::VectorXd gap = upper - lower;
    IntervalState next;
    next.upper = M * upper + injection_term(gains, model, upper, lower, y) + Ly + gains.F * gap + model.w_hi();
    next.lower = M * lower + injection_term(gains, model, lower, upper, y) + Ly - gains.F * gap + model.w_lo();
    return next;
}

IntervalState step_transformed(const TransformedObserverGains& gains, const SystemModel& model,
                               const Eigen::VectorXd& upper, const Eigen::VectorXd& lower, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd aleph = gains.S * (model.A() - gains.Lambda * model.C()) * gains.U;
    const Eigen::VectorXd SLy = gains.S * (gains.Lambda * y);
    const Eigen::MatrixXd Sp = pos_part(gains.S);
    const Eigen::MatrixXd Sn = neg_part(gains.S);
    const Eigen::VectorXd gap = upper - lower;
    IntervalState next;
    next.upper = aleph * upper + injection_term(gains, model, upper, lower, y) + SLy + gains.Phi * gap +
                 Sp * model.w_hi() - Sn * model.w_lo();
    next.lower = aleph * lower + injection_term(gains, model, lower, upper, y) + SLy - gains.Phi * gap +
                 Sp * model.w_lo() - Sn * model.w_hi();
    return next;
}

IntervalState back_transform(const Eigen::MatrixXd& U, const Eigen::VectorXd& upper, const Eigen::VectorXd& lower) {
    const Eigen::MatrixXd Up = pos_part(U);
    const Eigen::MatrixXd Un = neg_part(U);
    return {Up * upper - Un * lower, Up * lower - Un * upper};
}

IntervalState init_transformed(const Eigen::MatrixXd& S, const Eigen::VectorXd& upper, const Eigen::VectorXd& lower) {
    return back_transform(S, upper, lower);
}

MonitorCertificate monitor_certificate(const SystemModel& model, const Certificate& cert) {
    const auto& v = cert.variables;
    return {v.P, psi_matrix(effective_jacobian_bounds(model, cert.transform), v.ups_lo, v.ups_hi, v.G), cert.lambda,
            v.gamma};
}

int ObserverTrace::positivity_violations() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.positivity_ok; }));
}

int ObserverTrace::dqc_violations() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.dqc_ok; }));
}

int ObserverTrace::lyapunov_violations() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.lyapunov_ok; }));
}

int ObserverTrace::defect_violations() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.defect_ok; }));
}

Eigen::VectorXd ObserverTrace::max_width() const {
    if (records.empty())
        return {};
    Eigen::VectorXd out = Eigen::VectorXd::Zero(records.front().x.size());
    for (const auto& r : records)
        out = out.cwiseMax(r.upper - r.lower);
    return out;
}

double ObserverTrace::ultimate_width() const {
    if (records.empty())
        return 0.0;
    const std::size_t tail = std::max<std::size_t>(1, records.size() / 5);
    double sum = 0.0;
    for (std::size_t i = records.size() - tail; i < records.size(); ++i)
        sum += (records[i].upper - records[i].lower).sum();
    return sum / static_cast<double>(tail);
}

namespace {

// Plant advance: returns the next state and fills the disturbance it
// corresponds to (and the Euler defect norm for sampled runs).
using PlantAdvance = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, Eigen::VectorXd& w, double& defect)>;

ObserverTrace run_observer(const SystemModel& model, const ObserverGains& gains, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& upper0, const Eigen::VectorXd& lower0, int horizon,
                           const SimulationOptions& options, const PlantAdvance& advance, double defect_bound) {
    validate_gains(gains, model);
    const Eigen::Index n = model.n();
    if (x0.size() != n || upper0.size() != n || lower0.size() != n)
        throw DimensionError("initial state and bounds must have length n");
    if (horizon < 0)
        throw SimulationError("horizon must be nonnegative");
    const double tol = options.tolerances.positivity;
    if ((x0 - lower0).minCoeff() < -tol || (upper0 - x0).minCoeff() < -tol)
        throw SimulationError("initial bounds must satisfy lower0 <= x0 <= upper0");

    const auto* tg = std::get_if<TransformedObserverGains>(&gains);
    const auto* dg = std::get_if<DirectObserverGains>(&gains);
    const Eigen::MatrixXd S = tg ? tg->S : Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Xi = tg ? mirror_blocks(pos_part(S), neg_part(S)) : Eigen::MatrixXd::Identity(2 * n, 2 * n);
    if (options.certificate && (options.certificate->P.rows() != 2 * n || options.certificate->Psi.rows() != 2 * n))
        throw DimensionError("monitor certificate must be 2n x 2n");

    auto pi = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& y) {
        return tg ? injection_term(*tg, model, a, b, y) : injection_term(*dg, model, a, b, y);
    };
    auto step = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& y) {
        return tg ? step_transformed(*tg, model, a, b, y) : step_direct(*dg, model, a, b, y);
    };
    auto error_of = [&](const IntervalState& obs, const Eigen::VectorXd& x) {
        const Eigen::VectorXd sx = S * x;
        Eigen::VectorXd e(2 * n);
        e << obs.upper - sx, sx - obs.lower;
        return e;
    };

    ObserverTrace trace;
    trace.seed = options.seed;
    trace.transformed = tg != nullptr;
    trace.monitored = options.certificate.has_value();
    trace.defect_bound = defect_bound;
    trace.records.reserve(static_cast<std::size_t>(horizon) + 1);

    Eigen::VectorXd x = x0;
    IntervalState obs = tg ? init_transformed(S, upper0, lower0) : IntervalState{upper0, lower0};
    for (int k = 0; k <= horizon; ++k) {
        TraceRecord rec;
        rec.k = k;
        rec.x = x;
        if (tg) {
            rec.z_upper = obs.upper;
            rec.z_lower = obs.lower;
            const IntervalState xb = back_transform(tg->U, obs.upper, obs.lower);
            rec.upper = xb.upper;
            rec.lower = xb.lower;
        } else {
            rec.upper = obs.upper;
            rec.lower = obs.lower;
        }
        rec.error = error_of(obs, x);
        rec.min_error = std::min({rec.error.minCoeff(), (rec.upper - x).minCoeff(), (x - rec.lower).minCoeff()});
        rec.positivity_ok = rec.min_error >= -tol;

        if (k == horizon) {
            trace.records.push_back(std::move(rec));
            break;
        }

        const Eigen::VectorXd y = model.output(x);
        double defect = 0.0;
        Eigen::VectorXd w;
        const Eigen::VectorXd x_next = advance(x, w, defect);
        const IntervalState obs_next = step(obs.upper, obs.lower, y);

        rec.w = w;
        rec.defect = defect;
        rec.defect_ok = defect <= defect_bound * (1.0 + 1e-12);
        Eigen::VectorXd raw_w(2 * n);
        raw_w << model.w_hi() - w, w - model.w_lo();
        rec.delta_w = Xi * raw_w;
        const Eigen::VectorXd sp = S * model.p(x);
        rec.delta_p.resize(2 * n);
        rec.delta_p << pi(obs.upper, obs.lower, y) - sp, sp - pi(obs.lower, obs.upper, y);

        if (const auto& mc = options.certificate) {
            const Eigen::VectorXd e_next = error_of(obs_next, x_next);
            rec.V = rec.error.dot(mc->P * rec.error);
            const double v_next = e_next.dot(mc->P * e_next);
            rec.dqc = (mc->Psi * rec.error - rec.delta_p).dot(rec.delta_p);
            rec.lyapunov_excess = v_next - mc->lambda * rec.V - mc->gamma * rec.delta_w.squaredNorm();
            const double scale = std::max(1.0, rec.error.squaredNorm() + e_next.squaredNorm() +
                                                   rec.delta_p.squaredNorm() + rec.delta_w.squaredNorm());
            rec.dqc_ok = rec.dqc >= -options.tolerances.quadratic;
            rec.lyapunov_ok = rec.lyapunov_excess <= options.tolerances.quadratic * scale;
        }

        trace.records.push_back(std::move(rec));
        x = x_next;
        obs = obs_next;
    }
    return trace;
}

} // namespace

ObserverTrace simulate(const SystemModel& model, const ObserverGains& gains, const Eigen::VectorXd& x0,
                       const Eigen::VectorXd& upper0, const Eigen::VectorXd& lower0, int horizon,
                       const SimulationOptions& options) {
    std::mt19937_64 rng(options.seed);
    const Eigen::Index n = model.n();
    PlantAdvance advance = [&](const Eigen::VectorXd& x, Eigen::VectorXd& w, double&) {
        w.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double lo = model.w_lo()[i];
            const double hi = model.w_hi()[i];
            w[i] = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
        }
        return model.step(x, w);
    };
    return run_observer(model, gains, x0, upper0, lower0, horizon, options, advance,
                        std::numeric_limits<double>::infinity());
}

void SampledDataConfig::validate() const {
    if (A_c.rows() != A_c.cols() || A_c.rows() == 0)
        throw DimensionError("A_c must be square and nonempty");
    if (!(h > 0.0))
        throw SimulationError("sampling period h must be positive");
    if (truth_substeps < 10)
        throw SimulationError("truth_substeps must be at least 10");
    if (!rho)
        throw SimulationError("rho must be set");
}

NonlinearitySpec scale_nonlinearity(const NonlinearitySpec& spec, double h) {
    NonlinearitySpec out = spec;
    if (spec.name == "zero")
        return out;
    if (spec.name == "pendulum_sin") {
        if (out.params.empty())
            throw ModelError("pendulum_sin takes parameters [h] or [h, j]");
        out.params[0] *= h;
        return out;
    }
    if (spec.name == "coupled_sin" || spec.name == "affine_saturation") {
        for (double& v : out.params)
            v *= h;
        return out;
    }
    throw ModelError("cannot scale nonlinearity '" + spec.name + "'");
}

SystemModel discretize(const SampledDataConfig& config, const Eigen::MatrixXd& C, const Eigen::MatrixXd& Dc_lo,
                       const Eigen::MatrixXd& Dc_hi, std::optional<Region> region) {
    config.validate();
    const Eigen::Index n = config.A_c.rows();
    const Eigen::VectorXd bound = Eigen::VectorXd::Constant(n, config.h * config.rho(config.h));
    return SystemModel(Eigen::MatrixXd::Identity(n, n) + config.h * config.A_c, C,
                       scale_nonlinearity(config.p_c, config.h), config.h * Dc_lo, config.h * Dc_hi, -bound, bound,
                       std::move(region));
}

Eigen::VectorXd integrate_truth(const SampledDataConfig& config, const Eigen::VectorXd& x) {
    const VectorMap pc = make_nonlinearity(config.p_c, config.A_c.rows());
    auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd { return config.A_c * s + pc(s); };
    const double dt = config.h / config.truth_substeps;
    Eigen::VectorXd s = x;
    for (int i = 0; i < config.truth_substeps; ++i) {
        const Eigen::VectorXd k1 = f(s);
        const Eigen::VectorXd k2 = f(s + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = f(s + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = f(s + dt * k3);
        s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return s;
}

ObserverTrace simulate_sampled(const SampledDataConfig& config, const SystemModel& model, const ObserverGains& gains,
                               const Eigen::VectorXd& x0, const Eigen::VectorXd& upper0, const Eigen::VectorXd& lower0,
                               int horizon, const SimulationOptions& options) {
    config.validate();
    if (config.A_c.rows() != model.n())
        throw DimensionError("sampled-data config and model disagree on n");
    PlantAdvance advance = [&](const Eigen::VectorXd& x, Eigen::VectorXd& w, double& defect) {
        const Eigen::VectorXd truth = integrate_truth(config, x);
        w = truth - model.step(x, Eigen::VectorXd::Zero(x.size()));
        defect = w.norm();
        return truth;
    };
    return run_observer(model, gains, x0, upper0, lower0, horizon, options, advance, config.h * config.rho(config.h));
}

} // namespace iobs
