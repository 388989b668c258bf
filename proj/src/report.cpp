#include "iobs/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "iobs/error.hpp"
#include "iobs/json_eigen.hpp"

namespace iobs {

namespace {

using nlohmann::json;

// Shortest text that reads back to the same double.
std::string number(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

const json& field(const json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name))
        throw ParseError(std::string("missing field '") + name + "'");
    return doc.at(name);
}

double number_field(const json& doc, const char* name) {
    const json& v = field(doc, name);
    if (!v.is_number())
        throw ParseError(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

json stats_json(const GridStats& s) {
    return {{"solved", s.solved},
            {"feasible", s.feasible},
            {"infeasible", s.infeasible},
            {"numerical_failures", s.numerical_failures},
            {"rejected", s.rejected}};
}

} // namespace

json gains_to_json(const ObserverGains& gains) {
    if (const auto* d = std::get_if<DirectObserverGains>(&gains))
        return {{"frame", "direct"},
                {"L", matrix_to_json(d->L)},
                {"K", matrix_to_json(d->K)},
                {"F", matrix_to_json(d->F)},
                {"G", matrix_to_json(d->G)}};
    const auto& t = std::get<TransformedObserverGains>(gains);
    return {{"frame", "transformed"},
            {"Lambda", matrix_to_json(t.Lambda)},
            {"S", matrix_to_json(t.S)},
            {"U", matrix_to_json(t.U)},
            {"H", matrix_to_json(t.H)},
            {"Phi", matrix_to_json(t.Phi)},
            {"Gamma", matrix_to_json(t.Gamma)}};
}

ObserverGains gains_from_json(const json& doc) {
    const json& frame = field(doc, "frame");
    if (frame == "direct")
        return DirectObserverGains{matrix_from_json(field(doc, "L"), "L"), matrix_from_json(field(doc, "K"), "K"),
                                   matrix_from_json(field(doc, "F"), "F"), matrix_from_json(field(doc, "G"), "G")};
    if (frame == "transformed")
        return TransformedObserverGains{
            matrix_from_json(field(doc, "Lambda"), "Lambda"), matrix_from_json(field(doc, "S"), "S"),
            matrix_from_json(field(doc, "U"), "U"),           matrix_from_json(field(doc, "H"), "H"),
            matrix_from_json(field(doc, "Phi"), "Phi"),       matrix_from_json(field(doc, "Gamma"), "Gamma")};
    throw ParseError("gains frame must be 'direct' or 'transformed'");
}

json certificate_to_json(const Certificate& cert) {
    const auto& v = cert.variables;
    json vars = {{"J", matrix_to_json(v.J)},           {"Y", matrix_to_json(v.Y)},
                 {"K", matrix_to_json(v.K)},           {"W", matrix_to_json(v.W)},
                 {"Ups_lo", matrix_to_json(v.ups_lo)}, {"Ups_hi", matrix_to_json(v.ups_hi)},
                 {"G", matrix_to_json(v.G)},           {"P", matrix_to_json(v.P)},
                 {"gamma", v.gamma}};
    json out = {{"tau", cert.tau}, {"lambda", cert.lambda}, {"variables", vars}};
    if (cert.transform)
        out["transform"] = {{"Lambda", matrix_to_json(cert.transform->Lambda)},
                            {"S", matrix_to_json(cert.transform->S)}};
    out["residuals"] = cert.residuals;
    out["post_checks"] = cert.post_checks;
    return out;
}

Certificate certificate_from_json(const json& doc) {
    Certificate cert;
    cert.tau = number_field(doc, "tau");
    cert.lambda = number_field(doc, "lambda");
    const json& v = field(doc, "variables");
    auto& out = cert.variables;
    out.J = matrix_from_json(field(v, "J"), "J");
    out.Y = matrix_from_json(field(v, "Y"), "Y");
    out.K = matrix_from_json(field(v, "K"), "K");
    out.W = matrix_from_json(field(v, "W"), "W");
    out.ups_lo = matrix_from_json(field(v, "Ups_lo"), "Ups_lo");
    out.ups_hi = matrix_from_json(field(v, "Ups_hi"), "Ups_hi");
    out.G = matrix_from_json(field(v, "G"), "G");
    out.P = matrix_from_json(field(v, "P"), "P");
    out.gamma = number_field(v, "gamma");
    if (doc.contains("transform")) {
        const json& t = doc.at("transform");
        const Eigen::MatrixXd Lambda = matrix_from_json(field(t, "Lambda"), "Lambda");
        const Eigen::MatrixXd S = matrix_from_json(field(t, "S"), "S");
        const Eigen::MatrixXd U = S.inverse();
        cert.transform = TransformPair{Lambda, S, U, Eigen::MatrixXd()};
    }
    if (doc.contains("residuals"))
        cert.residuals = doc.at("residuals").get<std::map<std::string, double>>();
    if (doc.contains("post_checks"))
        cert.post_checks = doc.at("post_checks").get<std::map<std::string, bool>>();
    return cert;
}

json synthesis_report(const SynthesisResult& result, const std::string& mode) {
    json out = {{"status", result.status()}, {"mode", mode}, {"grid", stats_json(result.stats)}};
    if (result.diagnostic) {
        json flagged = json::array();
        for (const auto& f : result.diagnostic->flagged)
            flagged.push_back({{"index", f.index + 1}, {"value", f.value}});
        out["diagnostic"] = {{"direct_infeasible", result.diagnostic->direct_infeasible()},
                             {"flagged", flagged},
                             {"message", result.diagnostic->describe()}};
    }
    if (result.gains)
        out["gains"] = gains_to_json(*result.gains);
    if (result.certificate)
        out["certificate"] = certificate_to_json(*result.certificate);
    return out;
}

void write_trace_csv(const ObserverTrace& trace, std::ostream& out) {
    const Eigen::Index n = trace.records.empty() ? 0 : trace.records.front().x.size();
    out << "k";
    for (const char* prefix : {"x_", "xbar_", "xlow_"})
        for (Eigen::Index i = 1; i <= n; ++i)
            out << ',' << prefix << i;
    out << ",min_error,positivity_ok,dqc,dqc_ok,lyapunov_excess,lyapunov_ok,defect,defect_ok\n";
    for (const auto& r : trace.records) {
        out << r.k;
        for (const Eigen::VectorXd* v : {&r.x, &r.upper, &r.lower})
            for (Eigen::Index i = 0; i < n; ++i)
                out << ',' << number((*v)[i]);
        out << ',' << number(r.min_error) << ',' << int(r.positivity_ok) << ',' << number(r.dqc) << ','
            << int(r.dqc_ok) << ',' << number(r.lyapunov_excess) << ',' << int(r.lyapunov_ok) << ','
            << number(r.defect) << ',' << int(r.defect_ok) << '\n';
    }
}

json trace_summary(const ObserverTrace& trace) {
    double max_defect = 0.0;
    double min_error = 0.0;
    for (const auto& r : trace.records) {
        max_defect = std::max(max_defect, r.defect);
        min_error = std::min(min_error, r.min_error);
    }
    json out = {{"seed", trace.seed},
                {"records", trace.records.size()},
                {"transformed", trace.transformed},
                {"monitored", trace.monitored},
                {"violations",
                 {{"positivity", trace.positivity_violations()},
                  {"dqc", trace.dqc_violations()},
                  {"lyapunov", trace.lyapunov_violations()},
                  {"defect", trace.defect_violations()}}},
                {"min_error", min_error},
                {"max_width", vector_to_json(trace.max_width())},
                {"ultimate_width", trace.ultimate_width()}};
    if (trace.defect_bound > 0.0) {
        out["defect_bound"] = trace.defect_bound;
        out["max_defect"] = max_defect;
        out["valid"] = trace.defect_violations() == 0;
    }
    return out;
}

void write_plot_csv(const ObserverTrace& trace, double h, std::ostream& out) {
    const Eigen::Index n = trace.records.empty() ? 0 : trace.records.front().x.size();
    out << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        out << ",x_" << i << ",xbar_" << i << ",xlow_" << i;
    out << '\n';
    for (const auto& r : trace.records) {
        out << number(r.k * h);
        for (Eigen::Index i = 0; i < n; ++i)
            out << ',' << number(r.x[i]) << ',' << number(r.upper[i]) << ',' << number(r.lower[i]);
        out << '\n';
    }
}

void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw Error("cannot open '" + path + "' for writing");
    file << text;
    if (!file)
        throw Error("failed writing '" + path + "'");
}

void write_json_file(const json& doc, const std::string& path) { write_text_file(doc.dump(2) + "\n", path); }

json read_json_file(const std::string& path) {
    std::ifstream file(path);
    if (!file)
        throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(file);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in '" + path + "': " + e.what());
    }
}

} // namespace iobs
