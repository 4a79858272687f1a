#include "psvae/table.hpp"

#include "psvae/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace psvae {

const RawColumn* RawTable::find(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name)
            return &c;
    return nullptr;
}

int RawTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name)
            return static_cast<int>(i);
    return -1;
}

std::vector<std::string> RawTable::header() const {
    std::vector<std::string> h;
    h.reserve(columns.size());
    for (const auto& c : columns)
        h.push_back(c.name);
    return h;
}

bool parse_double(std::string_view cell, double& out) {
    if (cell.empty())
        return false;
    if (cell.front() == '+')
        cell.remove_prefix(1); // from_chars rejects a leading '+'
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

namespace {

// Splits a CSV stream into records of fields; quoted fields may contain
// separators, doubled quotes, and embedded line breaks.
std::vector<std::vector<std::string>> parse_records(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool record_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        record_started = false;
    };

    char c;
    bool first_char = true;
    while (in.get(c)) {
        if (first_char) {
            first_char = false;
            // strip UTF-8 BOM
            if (static_cast<unsigned char>(c) == 0xEF) {
                char b1, b2;
                if (in.get(b1) && in.get(b2) && static_cast<unsigned char>(b1) == 0xBB &&
                    static_cast<unsigned char>(b2) == 0xBF)
                    continue;
                throw DataError("csv error: malformed byte-order mark");
            }
        }
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started && !field.empty())
                throw DataError("csv error: quote inside unquoted field");
            in_quotes = true;
            field_started = true;
            record_started = true;
            break;
        case ',':
            end_field();
            record_started = true;
            break;
        case '\r':
            if (in.peek() == '\n')
                in.get();
            if (record_started)
                end_record();
            break;
        case '\n':
            if (record_started)
                end_record();
            break;
        default:
            field += c;
            field_started = true;
            record_started = true;
            break;
        }
    }
    if (in_quotes)
        throw DataError("csv error: unterminated quoted field");
    if (record_started || field_started || !record.empty())
        end_record();
    return records;
}

} // namespace

RawTable read_csv(std::istream& in) {
    auto records = parse_records(in);
    if (records.empty())
        throw DataError("csv error: empty input, expected a header row");

    const auto& header = records.front();
    RawTable table;
    table.columns.resize(header.size());
    for (std::size_t i = 0; i < header.size(); ++i)
        table.columns[i].name = header[i];

    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.size() != header.size())
            throw DataError("csv error: row " + std::to_string(r) + " has " +
                            std::to_string(rec.size()) + " fields, expected " +
                            std::to_string(header.size()));
        for (std::size_t i = 0; i < rec.size(); ++i)
            table.columns[i].cells.push_back(std::move(rec[i]));
    }

    for (auto& col : table.columns) {
        col.numeric = !col.cells.empty();
        col.values.reserve(col.cells.size());
        for (const auto& cell : col.cells) {
            double v;
            if (!parse_double(cell, v)) {
                col.numeric = false;
                break;
            }
            col.values.push_back(v);
        }
        if (!col.numeric)
            col.values.clear();
    }
    return table;
}

RawTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("io error: cannot open '" + path + "' for reading");
    return read_csv(in);
}

namespace {

void write_field(std::ostream& out, const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
        out << f;
        return;
    }
    out << '"';
    for (char c : f) {
        if (c == '"')
            out << '"';
        out << c;
    }
    out << '"';
}

} // namespace

void write_csv(std::ostream& out, const RawTable& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i)
            out << ',';
        write_field(out, table.columns[i].name);
    }
    out << '\n';
    const std::size_t rows = table.n_rows();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i)
                out << ',';
            write_field(out, table.columns[i].cells[r]);
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const RawTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("io error: cannot open '" + path + "' for writing");
    write_csv(out, table);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace psvae
