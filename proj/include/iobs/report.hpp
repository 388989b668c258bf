#pragma once

// File formats: synthesis reports (JSON), observer traces (CSV) and trace
// summaries (JSON).

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "iobs/gains.hpp"
#include "iobs/observer.hpp"
#include "iobs/synthesis.hpp"

namespace iobs {

[[nodiscard]] nlohmann::json gains_to_json(const ObserverGains& gains);
[[nodiscard]] ObserverGains gains_from_json(const nlohmann::json& doc);

[[nodiscard]] nlohmann::json certificate_to_json(const Certificate& cert);
[[nodiscard]] Certificate certificate_from_json(const nlohmann::json& doc);

// status, mode, grid statistics, diagnostic, and on success the gains and
// certificate.
[[nodiscard]] nlohmann::json synthesis_report(const SynthesisResult& result, const std::string& mode);

// Columns k, x_i, xbar_i, xlow_i, then the monitor flags and values.
void write_trace_csv(const ObserverTrace& trace, std::ostream& out);
[[nodiscard]] nlohmann::json trace_summary(const ObserverTrace& trace);

// Time-indexed bounds for plotting: t, x_i, xbar_i, xlow_i.
void write_plot_csv(const ObserverTrace& trace, double h, std::ostream& out);

// Writes with a trailing newline; throws Error on I/O failure.
void write_json_file(const nlohmann::json& doc, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);
[[nodiscard]] nlohmann::json read_json_file(const std::string& path);

} // namespace iobs
