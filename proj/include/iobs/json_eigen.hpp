#pragma once

// Row-major nested-array (de)serialization of Eigen matrices.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>

#include "iobs/error.hpp"

namespace iobs {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array())
        throw ParseError("field '" + field + "' must be a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0)
        return Eigen::MatrixXd(0, 0);
    if (!j.front().is_array())
        throw ParseError("field '" + field + "' must be a nested array");
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ParseError("field '" + field + "' has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_number())
                throw ParseError("field '" + field + "' contains a non-number");
            m(i, c) = e.get<double>();
        }
    }
    return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array())
        throw ParseError("field '" + field + "' must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ParseError("field '" + field + "' contains a non-number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

} // namespace iobs
