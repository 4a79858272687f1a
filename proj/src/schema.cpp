#include "psvae/schema.hpp"

#include "psvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace psvae {

std::size_t TableSchema::total_width() const {
    std::size_t w = 0;
    for (const auto& c : columns)
        w += c.cardinality();
    return w;
}

std::vector<std::size_t> TableSchema::group_offsets() const {
    std::vector<std::size_t> offs(columns.size() + 1, 0);
    for (std::size_t i = 0; i < columns.size(); ++i)
        offs[i + 1] = offs[i] + columns[i].cardinality();
    return offs;
}

int TableSchema::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name)
            return static_cast<int>(i);
    return -1;
}

std::size_t bucket_count_for(std::size_t n_records, std::size_t cap) {
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_records)));
    while (r > 0 && r * r > n_records)
        --r;
    while ((r + 1) * (r + 1) <= n_records)
        ++r;
    return std::min(r, cap);
}

namespace {

void reject_missing(const RawColumn& col) {
    for (std::size_t r = 0; r < col.cells.size(); ++r) {
        if (col.cells[r].empty())
            throw DataError("schema error: missing value in column '" + col.name + "' at row " +
                            std::to_string(r + 1));
        if (col.numeric && !std::isfinite(col.values[r]))
            throw DataError("schema error: non-finite value in column '" + col.name +
                            "' at row " + std::to_string(r + 1));
    }
}

ColumnSchema categorical_from_text(const RawColumn& col) {
    ColumnSchema s;
    s.name = col.name;
    s.kind = ColumnKind::categorical;
    std::unordered_set<std::string_view> seen;
    for (const auto& cell : col.cells)
        if (seen.insert(cell).second)
            s.categories.push_back(cell);
    return s;
}

// Distinctness by parsed value; the label is the first-seen spelling.
ColumnSchema categorical_from_numeric(const RawColumn& col) {
    ColumnSchema s;
    s.name = col.name;
    s.kind = ColumnKind::categorical;
    std::unordered_set<double> seen;
    for (std::size_t r = 0; r < col.values.size(); ++r)
        if (seen.insert(col.values[r]).second)
            s.categories.push_back(col.cells[r]);
    return s;
}

ColumnSchema continuous_from_numeric(const RawColumn& col, std::size_t buckets) {
    std::vector<double> sorted = col.values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    ColumnSchema s;
    s.name = col.name;
    s.kind = ColumnKind::continuous;
    s.bucket_edges.reserve(buckets + 1);
    s.bucket_edges.push_back(sorted.front());
    for (std::size_t k = 1; k < buckets; ++k) {
        const double edge = sorted[k * n / buckets];
        if (edge > s.bucket_edges.back())
            s.bucket_edges.push_back(edge);
    }
    if (sorted.back() > s.bucket_edges.back())
        s.bucket_edges.push_back(sorted.back());
    if (s.bucket_edges.size() < 2)
        throw DataError("schema error: column '" + col.name +
                        "' has a single distinct value and cannot be bucketed");
    return s;
}

} // namespace

TableSchema infer_schema(const RawTable& table, std::size_t bucket_cap,
                         const TypeOverrides& overrides) {
    if (table.columns.empty() || table.n_rows() == 0)
        throw DataError("schema error: empty table");
    for (const auto& [name, kind] : overrides) {
        (void)kind;
        if (table.column_index(name) < 0)
            throw DataError("schema error: type override names unknown column '" + name + "'");
    }

    const std::size_t n = table.n_rows();
    const std::size_t buckets = bucket_count_for(n, bucket_cap);

    TableSchema schema;
    schema.n_records = n;
    schema.columns.reserve(table.columns.size());

    for (const auto& col : table.columns) {
        reject_missing(col);
        auto forced = overrides.find(col.name);
        const bool force_cat = forced != overrides.end() && forced->second == ColumnKind::categorical;
        const bool force_cont = forced != overrides.end() && forced->second == ColumnKind::continuous;

        if (force_cont && !col.numeric)
            throw DataError("schema error: column '" + col.name +
                            "' is not numeric and cannot be continuous");

        if (!col.numeric || force_cat) {
            schema.columns.push_back(col.numeric ? categorical_from_numeric(col)
                                                 : categorical_from_text(col));
            continue;
        }

        std::unordered_set<double> distinct(col.values.begin(), col.values.end());
        if (force_cont || distinct.size() > buckets)
            schema.columns.push_back(continuous_from_numeric(col, buckets));
        else
            schema.columns.push_back(categorical_from_numeric(col));
    }
    return schema;
}

std::size_t bucket_index(const ColumnSchema& col, double v) {
    const auto& e = col.bucket_edges;
    if (!(v >= e.front() && v <= e.back()))
        throw DataError("encode error: value " + format_double(v) + " outside bucket range of column '" +
                        col.name + "'");
    if (v == e.back())
        return e.size() - 2; // last bucket is right-closed
    auto it = std::upper_bound(e.begin(), e.end(), v);
    return static_cast<std::size_t>(it - e.begin()) - 1;
}

std::size_t bucket_index_clamped(const ColumnSchema& col, double v) {
    const auto& e = col.bucket_edges;
    if (!std::isfinite(v))
        throw DataError("encode error: non-finite value in column '" + col.name + "'");
    if (v <= e.front())
        return 0;
    if (v >= e.back())
        return e.size() - 2;
    auto it = std::upper_bound(e.begin(), e.end(), v);
    return static_cast<std::size_t>(it - e.begin()) - 1;
}

} // namespace psvae
