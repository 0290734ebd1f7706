#pragma once

#include "fdtest/common.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fdtest::io {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline bool parse_double(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace detail

// Reads a numeric CSV (rows = points). A single non-numeric first row is
// treated as a header and skipped. Throws CsvError naming the offending line
// on ragged rows or non-numeric cells.
inline SampleSet read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open file");

    std::vector<std::vector<double>> rows;
    std::string line;
    long line_number = 0;
    bool first_data_row = true;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_line(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], row[c])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_data_row) continue;  // header row
            throw CsvError(path + ": non-numeric cell at line " + std::to_string(line_number));
        }
        if (first_data_row) {
            width = row.size();
            first_data_row = false;
        } else if (row.size() != width) {
            throw CsvError(path + ": ragged row at line " + std::to_string(line_number));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw CsvError(path + ": no numeric rows");

    SampleSet out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return out;
}

inline void write_csv(const std::string& path, const SampleSet& data, bool header = false) {
    std::ofstream out(path);
    if (!out) throw CsvError(path + ": cannot open file for writing");
    out.precision(17);
    if (header) {
        for (Eigen::Index j = 0; j < data.cols(); ++j)
            out << (j ? ",x" : "x") << j;
        out << "\n";
    }
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (j) out << ",";
            out << data(i, j);
        }
        out << "\n";
    }
}

}  // namespace fdtest::io
