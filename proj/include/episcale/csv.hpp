// Minimal CSV reading shared by the ingest parsers. The toolkit's formats
// never quote fields, so splitting on commas is the whole grammar.

#pragma once

#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace episcale {

struct ParseError : std::runtime_error {
    long line;
    ParseError(long line_, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

struct CsvRow {
    long line = 0;                    // 1-based file line (header is line 1)
    std::vector<std::string> fields;  // in expected-header order
};

/// Reads a whole CSV stream. The header must contain exactly the expected
/// labels, each once, in any order; fields are re-ordered to match.
/// Blank lines are skipped. Rows with a wrong field count are returned
/// as-is (empty reordering) for the caller to reject with context.
struct CsvTable {
    std::vector<CsvRow> rows;         // well-shaped rows, fields in expected order
    std::vector<CsvRow> malformed;    // wrong field count, fields as found
    long data_lines = 0;              // non-blank non-header lines seen
};

inline CsvTable read_csv(std::istream& in, std::span<const std::string_view> expected) {
    std::string line;
    long lineno = 0;

    auto next_line = [&](std::string& out) -> bool {
        if (!std::getline(in, out)) return false;
        ++lineno;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
    };

    if (!next_line(line)) throw ParseError(1, "missing header");
    auto labels = split_csv_line(line);
    std::vector<int> col(expected.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        bool known = false;
        for (std::size_t j = 0; j < expected.size(); ++j) {
            if (labels[i] == expected[j]) {
                if (col[j] != -1) throw ParseError(1, "duplicate header column '" + labels[i] + "'");
                col[j] = int(i);
                known = true;
                break;
            }
        }
        if (!known) throw ParseError(1, "unexpected header column '" + labels[i] + "'");
    }
    for (std::size_t j = 0; j < expected.size(); ++j)
        if (col[j] == -1)
            throw ParseError(1, "missing header column '" + std::string(expected[j]) + "'");

    CsvTable table;
    while (next_line(line)) {
        if (line.empty()) continue;
        ++table.data_lines;
        auto fields = split_csv_line(line);
        if (fields.size() != labels.size()) {
            table.malformed.push_back({lineno, std::move(fields)});
            continue;
        }
        CsvRow row;
        row.line = lineno;
        row.fields.reserve(expected.size());
        for (std::size_t j = 0; j < expected.size(); ++j)
            row.fields.push_back(fields[std::size_t(col[j])]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace episcale
