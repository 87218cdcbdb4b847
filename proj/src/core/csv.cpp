#include "gesturelab/core/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gesturelab/core/error.hpp"

namespace gesturelab::csv {

namespace {

std::vector<std::string> split_comma(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
    if (b == e) return false;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
}

} // namespace

std::string format_row(std::span<const double> values) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

void write_matrix(const std::string& path, const Matrix& m,
                  const std::vector<std::string>& header) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    if (!header.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) f << ',';
            f << header[i];
        }
        f << '\n';
    }
    for (std::size_t r = 0; r < m.rows(); ++r) f << format_row(m.row(r)) << '\n';
}

Matrix read_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t cols = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_comma(line);
        std::vector<double> row(cells.size());
        bool ok = true;
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (!parse_double(cells[i], row[i])) {
                ok = false;
                break;
            }
        if (!ok) {
            if (rows.empty() && lineno == 1) continue; // header line
            throw ParseError("non-numeric cell in " + path, lineno);
        }
        if (cols == 0) cols = row.size();
        if (row.size() != cols)
            throw ParseError("ragged row in " + path, lineno);
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
    return m;
}

} // namespace gesturelab::csv
