#pragma once

#include "psvae/table.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace psvae {

enum class ColumnKind { categorical, continuous };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    std::vector<std::string> categories; // categorical: labels in first-appearance order
    std::vector<double> bucket_edges;    // continuous: B+1 strictly ascending edges

    std::size_t cardinality() const {
        return kind == ColumnKind::categorical ? categories.size() : bucket_edges.size() - 1;
    }
};

struct TableSchema {
    std::vector<ColumnSchema> columns;
    std::size_t n_records = 0;

    std::size_t total_width() const;
    // Per-column start index into the one-hot width dimension; size columns+1,
    // last entry equals total_width.
    std::vector<std::size_t> group_offsets() const;
    int column_index(std::string_view name) const; // -1 if absent
};

using TypeOverrides = std::map<std::string, ColumnKind, std::less<>>;

// min(floor(sqrt(n_records)), cap)
std::size_t bucket_count_for(std::size_t n_records, std::size_t cap = 100);

// Numeric columns with more distinct values than the bucket count become
// continuous with equal-frequency buckets; everything else is categorical.
TableSchema infer_schema(const RawTable& table, std::size_t bucket_cap = 100,
                         const TypeOverrides& overrides = {});

// Bucket lookup: edges[i] <= v < edges[i+1], last bucket right-closed.
// Throws DataError when v is outside [front, back] or non-finite.
std::size_t bucket_index(const ColumnSchema& col, double v);
// Same, but values outside the edge range land in the boundary buckets.
std::size_t bucket_index_clamped(const ColumnSchema& col, double v);

} // namespace psvae
