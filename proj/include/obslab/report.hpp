#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "obslab/duality.hpp"
#include "obslab/estimates.hpp"
#include "obslab/linalg.hpp"

namespace obslab {

using ordered_json = nlohmann::ordered_json;

// A reported numeric with its tolerance and pass flag.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline ordered_json to_json(const CheckResult& c) {
    return ordered_json{{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                        {"pass", c.pass}};
}

inline ordered_json to_json(const FitReport& r) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : r.cells) {
        cells.push_back(ordered_json{{"x0", c.x0},
                                     {"x1", c.x1},
                                     {"predictor", c.predictor},
                                     {"measured", c.measured},
                                     {"bound", c.bound},
                                     {"excluded", c.excluded},
                                     {"violated", c.violated}});
    }
    ordered_json fitted = ordered_json::object();
    for (const auto& [k, v] : r.fitted) fitted[k] = v;
    return ordered_json{{"params", {r.axes[0], r.axes[1]}},
                        {"fitted", fitted},
                        {"r2", r.r2},
                        {"violations", r.violation_count},
                        {"cells", cells}};
}

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// One row per cell: axis values, measured value, bound, flags.
inline std::string fit_report_csv(const FitReport& r, const std::string& value_name = "measured") {
    std::string out;
    const bool two_axes = !r.axes[1].empty();
    out += r.axes[0];
    if (two_axes) out += "," + r.axes[1];
    out += "," + value_name + ",bound,excluded,violated\n";
    for (const auto& c : r.cells) {
        out += csv_number(c.x0);
        if (two_axes) out += "," + csv_number(c.x1);
        out += "," + csv_number(c.measured) + "," + csv_number(c.bound) + "," +
               (c.excluded ? "1" : "0") + "," + (c.violated ? "1" : "0") + "\n";
    }
    return out;
}

inline ordered_json to_json(const DualityReport& r) {
    return ordered_json{{"c_control", r.c_control},
                        {"c_obs", r.observable ? ordered_json(r.c_obs) : ordered_json("infinite")},
                        {"relative_gap", r.relative_gap},
                        {"observable", r.observable},
                        {"pass", r.pass},
                        {"tolerance", r.tolerance},
                        {"control_costs_by_eps", r.control_costs_by_eps},
                        {"per_x0_costs", r.per_x0_costs},
                        {"witness", r.witness}};
}

inline ordered_json to_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < m.rows; ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const ordered_json& j) {
    guard(j.is_array() && !j.empty(), "system spec: matrix must be a nonempty array of rows");
    const int rows = static_cast<int>(j.size());
    guard(j[0].is_array() && !j[0].empty(), "system spec: matrix rows must be arrays");
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        guard(j[static_cast<std::size_t>(i)].is_array() &&
                  static_cast<int>(j[static_cast<std::size_t>(i)].size()) == cols,
              "system spec: ragged matrix");
        for (int c = 0; c < cols; ++c)
            m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

// External system specification: {"A": [[..]], "B": [[..]], "T": .., "time_steps": ..}
inline ControlSystem control_system_from_json(const ordered_json& j) {
    guard(j.contains("A") && j.contains("B") && j.contains("T") && j.contains("time_steps"),
          "system spec: need A, B, T, time_steps");
    return ControlSystem::build(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")),
                                j.at("T").get<double>(), j.at("time_steps").get<int>());
}

inline ordered_json control_system_to_json(const ControlSystem& sys) {
    return ordered_json{{"A", to_json(sys.A)},
                        {"B", to_json(sys.B)},
                        {"T", sys.horizon},
                        {"time_steps", sys.time_steps}};
}

} // namespace obslab
