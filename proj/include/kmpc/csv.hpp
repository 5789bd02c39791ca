#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmpc/snapshots.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// A parsed CSV table: header names, comment lines (leading '#'), numeric rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::string> comments;
    Mat rows;

    Index column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<Index>(i);
        }
        throw std::invalid_argument("CsvTable: no column named '" + name + "'");
    }
};

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Mat& rows, const std::vector<std::string>& comments = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    for (const std::string& c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << header[i] << (i + 1 < header.size() ? "," : "");
    }
    out << "\n";
    for (Index r = 0; r < rows.rows(); ++r) {
        for (Index c = 0; c < rows.cols(); ++c) {
            out << detail::format_double(rows(r, c)) << (c + 1 < rows.cols() ? "," : "");
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            table.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2)
                                                                       : line.substr(1));
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (!have_header) {
            table.header = fields;
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw std::runtime_error("read_csv: row width mismatch in '" + path + "'");
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) {
            std::size_t pos = 0;
            const double v = std::stod(f, &pos);
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("read_csv: no header in '" + path + "'");
    table.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.rows(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return table;
}

/// Trial logs: header `t,x1..xn,u1..um`, one row per sample.
inline void write_trial(const std::string& path, const Trial& trial,
                        const std::vector<std::string>& comments = {}) {
    const int n = static_cast<int>(trial.states.cols());
    const int m = static_cast<int>(trial.inputs.cols());
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
    Mat rows(trial.samples(), 1 + n + m);
    rows.col(0) = trial.time;
    rows.middleCols(1, n) = trial.states;
    rows.middleCols(1 + n, m) = trial.inputs;
    write_csv(path, header, rows, comments);
}

inline Trial read_trial(const std::string& path, const std::string& name = "") {
    const CsvTable table = read_csv(path);
    int n = 0;
    int m = 0;
    if (table.header.empty() || table.header[0] != "t") {
        throw std::runtime_error("read_trial: '" + path + "' must start with a 't' column");
    }
    for (const std::string& h : table.header) {
        if (!h.empty() && h[0] == 'x') ++n;
        if (!h.empty() && h[0] == 'u') ++m;
    }
    if (n < 1 || 1 + n + m != static_cast<int>(table.header.size())) {
        throw std::runtime_error("read_trial: unexpected header layout in '" + path + "'");
    }
    Trial trial;
    trial.name = name.empty() ? path : name;
    trial.time = table.rows.col(0);
    trial.states = table.rows.middleCols(1, n);
    trial.inputs = table.rows.middleCols(1 + n, m);
    return trial;
}

}  // namespace kmpc
