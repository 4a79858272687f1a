#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace psvae {

// One parsed CSV column. A column is numeric iff every cell parses as a
// decimal float. Raw cell strings are kept either way so categorical output
// reproduces the input spelling exactly.
struct RawColumn {
    std::string name;
    bool numeric = false;
    std::vector<std::string> cells;
    std::vector<double> values; // filled only when numeric
};

struct RawTable {
    std::vector<RawColumn> columns;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().cells.size(); }
    const RawColumn* find(std::string_view name) const;
    int column_index(std::string_view name) const; // -1 if absent
    std::vector<std::string> header() const;
};

// RFC-4180 CSV with a header row. A UTF-8 BOM is stripped if present.
RawTable read_csv(std::istream& in);
RawTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const RawTable& table);
void write_csv_file(const std::string& path, const RawTable& table);

// Shortest round-trip decimal representation.
std::string format_double(double v);

// Full-cell float parse; returns false if any character is left over.
bool parse_double(std::string_view cell, double& out);

} // namespace psvae
