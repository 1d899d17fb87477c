#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hte/common.hpp"

namespace hte {

// Minimal CSV support: first row is a header, "." decimal separator, no
// quoting (none of the files we read or write need it).  Missing cells are
// the empty string or "NA".
struct CsvTable {
    std::vector<std::string> header;
    // cells[r][c]; std::nullopt marks a missing cell
    std::vector<std::vector<std::optional<double>>> cells;

    std::size_t rows() const { return cells.size(); }
    std::size_t cols() const { return header.size(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("INGEST_OPEN", "cannot open file: " + path);

    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (!have_header) {
            for (auto& f : fields) table.header.push_back(detail::trim(f));
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw IngestionError("INGEST_RAGGED",
                                 path + ": line " + std::to_string(line_no) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(table.header.size()));
        std::vector<std::optional<double>> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            std::string f = detail::trim(fields[c]);
            if (f.empty() || f == "NA") {
                row.push_back(std::nullopt);
                continue;
            }
            double v = 0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size())
                throw IngestionError("INGEST_PARSE",
                                     path + ": line " + std::to_string(line_no) +
                                         ", column '" + table.header[c] +
                                         "': cannot parse '" + f + "' as a number");
            row.push_back(v);
        }
        table.cells.push_back(std::move(row));
    }
    if (!have_header || table.cells.empty())
        throw IngestionError("INGEST_EMPTY", path + ": no data rows");
    return table;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IngestionError("INGEST_WRITE", "cannot write file: " + path);
    out.precision(17);
    for (std::size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << row[c];
        out << "\n";
    }
}

}  // namespace hte
