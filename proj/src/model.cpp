#include "iobs/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iobs/error.hpp"
#include "iobs/json_eigen.hpp"

namespace iobs {

namespace {

Eigen::MatrixXd square_from_params(const std::vector<double>& params, Eigen::Index n, std::size_t offset,
                                   const std::string& name) {
    const auto count = static_cast<std::size_t>(n * n);
    if (params.size() < offset + count)
        throw ModelError("nonlinearity '" + name + "' needs " + std::to_string(offset + count) + " parameters");
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            b(i, j) = params[offset + static_cast<std::size_t>(i * n + j)];
    return b;
}

std::string shape(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

std::vector<std::string> registered_nonlinearities() {
    return {"zero", "pendulum_sin", "coupled_sin", "affine_saturation"};
}

VectorMap make_nonlinearity(const NonlinearitySpec& spec, Eigen::Index n) {
    const auto& params = spec.params;
    if (spec.name == "zero")
        return [n](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(n); };

    if (spec.name == "pendulum_sin") {
        if (n != 2)
            throw ModelError("pendulum_sin requires n = 2");
        if (params.empty() || params.size() > 2)
            throw ModelError("pendulum_sin takes parameters [h] or [h, j]");
        const double h = params[0];
        const double j = params.size() == 2 ? params[1] : 1.0;
        if (j != 1.0 && j != 2.0)
            throw ModelError("pendulum_sin coordinate must be 1 or 2");
        const auto col = static_cast<Eigen::Index>(j) - 1;
        return [h, col](const Eigen::VectorXd& x) {
            Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
            out[1] = -h * std::sin(x[col]);
            return out;
        };
    }

    if (spec.name == "coupled_sin") {
        const Eigen::MatrixXd b = square_from_params(params, n, 0, spec.name);
        if (params.size() != static_cast<std::size_t>(n * n))
            throw ModelError("coupled_sin takes exactly n*n parameters");
        return [b](const Eigen::VectorXd& x) -> Eigen::VectorXd { return b * x.array().sin().matrix(); };
    }

    if (spec.name == "affine_saturation") {
        const Eigen::MatrixXd b = square_from_params(params, n, 0, spec.name);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        const auto nn = static_cast<std::size_t>(n * n);
        if (params.size() == nn + static_cast<std::size_t>(n)) {
            for (Eigen::Index i = 0; i < n; ++i)
                c[i] = params[nn + static_cast<std::size_t>(i)];
        } else if (params.size() != nn) {
            throw ModelError("affine_saturation takes n*n or n*n + n parameters");
        }
        return [b, c](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return b * x.cwiseMax(-1.0).cwiseMin(1.0) + c;
        };
    }

    throw ModelError("unknown nonlinearity '" + spec.name + "'");
}

SystemModel::SystemModel(Eigen::MatrixXd A, Eigen::MatrixXd C, NonlinearitySpec nonlinearity,
                         Eigen::MatrixXd D_lo, Eigen::MatrixXd D_hi, Eigen::VectorXd w_lo, Eigen::VectorXd w_hi,
                         std::optional<Region> region)
    : A_(std::move(A)), C_(std::move(C)), D_lo_(std::move(D_lo)), D_hi_(std::move(D_hi)), w_lo_(std::move(w_lo)),
      w_hi_(std::move(w_hi)), spec_(std::move(nonlinearity)), region_(std::move(region)) {
    validate();
    p_ = make_nonlinearity(spec_, n());
}

SystemModel SystemModel::with_callable(Eigen::MatrixXd A, Eigen::MatrixXd C, VectorMap p, Eigen::MatrixXd D_lo,
                                       Eigen::MatrixXd D_hi, Eigen::VectorXd w_lo, Eigen::VectorXd w_hi) {
    SystemModel model(std::move(A), std::move(C), NonlinearitySpec{}, std::move(D_lo), std::move(D_hi),
                      std::move(w_lo), std::move(w_hi));
    model.spec_ = NonlinearitySpec{"custom", {}};
    model.p_ = std::move(p);
    return model;
}

void SystemModel::validate() const {
    const Eigen::Index nx = A_.rows();
    if (nx == 0 || A_.cols() != nx)
        throw DimensionError("A must be square and nonempty, got " + shape(A_));
    if (C_.cols() != nx || C_.rows() == 0)
        throw DimensionError("C must have " + std::to_string(nx) + " columns, got " + shape(C_));
    if (D_lo_.rows() != nx || D_lo_.cols() != nx || D_hi_.rows() != nx || D_hi_.cols() != nx)
        throw DimensionError("Jacobian bounds must be " + std::to_string(nx) + "x" + std::to_string(nx));
    if (w_lo_.size() != nx || w_hi_.size() != nx)
        throw DimensionError("disturbance bounds must have length " + std::to_string(nx));
    if (!A_.allFinite() || !C_.allFinite() || !D_lo_.allFinite() || !D_hi_.allFinite() || !w_lo_.allFinite() ||
        !w_hi_.allFinite())
        throw ModelError("model contains non-finite entries");
    if (D_lo_.maxCoeff() > 0.0)
        throw ModelError("D_lo has a positive entry");
    if (D_hi_.minCoeff() < 0.0)
        throw ModelError("D_hi has a negative entry");
    if ((w_hi_ - w_lo_).minCoeff() < 0.0)
        throw ModelError("disturbance bounds inverted");
    if (region_) {
        if (region_->lo.size() != nx || region_->hi.size() != nx)
            throw DimensionError("region bounds must have length " + std::to_string(nx));
        if ((region_->hi - region_->lo).minCoeff() < 0.0)
            throw ModelError("region bounds inverted");
    }
}

Region SystemModel::region() const {
    if (region_)
        return *region_;
    return {Eigen::VectorXd::Constant(n(), -std::numbers::pi), Eigen::VectorXd::Constant(n(), std::numbers::pi)};
}

SystemModel SystemModel::with_disturbance(Eigen::VectorXd w_lo, Eigen::VectorXd w_hi) const {
    SystemModel copy = *this;
    copy.w_lo_ = std::move(w_lo);
    copy.w_hi_ = std::move(w_hi);
    copy.validate();
    return copy;
}

SystemModel model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object())
        throw ParseError("model file must contain a JSON object");
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!doc.contains(key))
            throw ParseError(std::string("model file is missing field '") + key + "'");
        return doc.at(key);
    };
    const auto n = need("n");
    const auto m = need("m");
    if (!n.is_number_integer() || !m.is_number_integer())
        throw ParseError("fields 'n' and 'm' must be integers");

    Eigen::MatrixXd A = matrix_from_json(need("A"), "A");
    Eigen::MatrixXd C = matrix_from_json(need("C"), "C");
    Eigen::MatrixXd D_lo = matrix_from_json(need("D_lo"), "D_lo");
    Eigen::MatrixXd D_hi = matrix_from_json(need("D_hi"), "D_hi");
    Eigen::VectorXd w_lo = vector_from_json(need("w_lo"), "w_lo");
    Eigen::VectorXd w_hi = vector_from_json(need("w_hi"), "w_hi");
    if (A.rows() != n.get<Eigen::Index>())
        throw DimensionError("A has " + std::to_string(A.rows()) + " rows but n = " + n.dump());
    if (C.rows() != m.get<Eigen::Index>())
        throw DimensionError("C has " + std::to_string(C.rows()) + " rows but m = " + m.dump());

    NonlinearitySpec spec;
    const auto& nl = need("nonlinearity");
    if (!nl.is_object() || !nl.contains("name") || !nl.at("name").is_string())
        throw ParseError("field 'nonlinearity' must be an object with a string 'name'");
    spec.name = nl.at("name").get<std::string>();
    if (nl.contains("params")) {
        const Eigen::VectorXd params = vector_from_json(nl.at("params"), "nonlinearity.params");
        spec.params.assign(params.data(), params.data() + params.size());
    }

    std::optional<Region> region;
    if (doc.contains("region")) {
        const auto& r = doc.at("region");
        if (!r.is_object() || !r.contains("lo") || !r.contains("hi"))
            throw ParseError("field 'region' must be an object with 'lo' and 'hi'");
        region = Region{vector_from_json(r.at("lo"), "region.lo"), vector_from_json(r.at("hi"), "region.hi")};
    }

    SystemModel model(std::move(A), std::move(C), std::move(spec), std::move(D_lo), std::move(D_hi),
                      std::move(w_lo), std::move(w_hi), std::move(region));
    if (doc.contains("Lambda"))
        model.lambda_hint = matrix_from_json(doc.at("Lambda"), "Lambda");
    if (doc.contains("S"))
        model.s_hint = matrix_from_json(doc.at("S"), "S");
    return model;
}

nlohmann::json model_to_json(const SystemModel& model) {
    nlohmann::json doc;
    doc["n"] = model.n();
    doc["m"] = model.m();
    doc["A"] = matrix_to_json(model.A());
    doc["C"] = matrix_to_json(model.C());
    doc["D_lo"] = matrix_to_json(model.D_lo());
    doc["D_hi"] = matrix_to_json(model.D_hi());
    doc["w_lo"] = vector_to_json(model.w_lo());
    doc["w_hi"] = vector_to_json(model.w_hi());
    doc["nonlinearity"] = {{"name", model.nonlinearity().name}, {"params", model.nonlinearity().params}};
    if (model.has_declared_region()) {
        const Region r = model.region();
        doc["region"] = {{"lo", vector_to_json(r.lo)}, {"hi", vector_to_json(r.hi)}};
    }
    if (model.lambda_hint)
        doc["Lambda"] = matrix_to_json(*model.lambda_hint);
    if (model.s_hint)
        doc["S"] = matrix_to_json(*model.s_hint);
    return doc;
}

SystemModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open model file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
    return model_from_json(doc);
}

void save_model(const SystemModel& model, const std::string& path) {
    if (!model.has_registry_nonlinearity())
        throw ModelError("models with a custom callable nonlinearity cannot be saved");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write model file '" + path + "'");
    out << model_to_json(model).dump(2) << '\n';
}

Eigen::MatrixXd finite_difference_jacobian(const VectorMap& f, const Eigen::VectorXd& x) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    Eigen::VectorXd xp = x, xm = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double step = 1e-6 * (1.0 + std::abs(x[j]));
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        jac.col(j) = (f(xp) - f(xm)) / (2.0 * step);
        xp[j] = xm[j] = x[j];
    }
    return jac;
}

JacobianReport check_jacobian_bounds(const SystemModel& model, std::size_t sample_count,
                                     std::optional<Region> region, double tol, std::uint64_t seed) {
    const Region box = region ? *region : model.region();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const VectorMap p = [&model](const Eigen::VectorXd& x) { return model.p(x); };

    JacobianReport report;
    Eigen::VectorXd x(model.n());
    for (std::size_t s = 0; s < sample_count; ++s) {
        for (Eigen::Index i = 0; i < model.n(); ++i)
            x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
        const Eigen::MatrixXd jac = finite_difference_jacobian(p, x);
        for (Eigen::Index i = 0; i < jac.rows(); ++i)
            for (Eigen::Index j = 0; j < jac.cols(); ++j)
                if (jac(i, j) < model.D_lo()(i, j) - tol || jac(i, j) > model.D_hi()(i, j) + tol)
                    report.violations.push_back({x, i, j, jac(i, j), model.D_lo()(i, j), model.D_hi()(i, j)});
        ++report.samples;
    }
    return report;
}

} // namespace iobs
