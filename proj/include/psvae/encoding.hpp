#pragma once

#include "psvae/rng.hpp"
#include "psvae/schema.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace psvae {

using IndexRow = std::vector<std::int32_t>;
using IndexRows = std::vector<IndexRow>;

// One-hot view of a table. Rows hold the selected category index per column
// group; dense 0/1 blocks are expanded on demand, which keeps wide tables
// (hundreds of bucket categories) cheap to store.
class EncodedMatrix {
public:
    EncodedMatrix() = default;
    EncodedMatrix(std::size_t rows, const TableSchema& schema);

    std::size_t rows() const { return static_cast<std::size_t>(indices_.rows()); }
    std::size_t n_columns() const { return group_offsets_.empty() ? 0 : group_offsets_.size() - 1; }
    std::size_t total_width() const { return group_offsets_.empty() ? 0 : group_offsets_.back(); }
    const std::vector<std::size_t>& group_offsets() const { return group_offsets_; }

    std::int32_t index(std::size_t row, std::size_t column) const { return indices_(row, column); }
    void set_index(std::size_t row, std::size_t column, std::int32_t category);

    IndexRow index_row(std::size_t row) const;

    // Dense 0/1 expansion: one row per selected sample, total_width columns.
    Eigen::MatrixXd dense_rows(std::span<const std::size_t> row_ids) const;
    Eigen::MatrixXd dense() const;

private:
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> indices_; // rows x columns
    std::vector<std::size_t> group_offsets_;                              // size columns+1
    std::vector<std::int32_t> cardinalities_;
};

// Per-column inverse-frequency cross-entropy weights.
struct CategoryWeights {
    std::vector<Eigen::VectorXd> per_column;
};

// Per-column category counts of a sample set.
struct MarginalSet {
    std::vector<std::vector<std::int64_t>> counts;
    std::int64_t total = 0;
};

// Label -> category index lookup with a fallback by parsed numeric value, so
// "1" and "1.0" resolve to the same category of a numeric-backed column.
class CategoryResolver {
public:
    explicit CategoryResolver(const ColumnSchema& col);
    std::int32_t index_of(const std::string& cell) const; // throws DataError on unseen labels

private:
    const ColumnSchema* col_;
    std::unordered_map<std::string, std::int32_t> by_label_;
    std::unordered_map<double, std::int32_t> by_value_;
};

EncodedMatrix encode(const RawTable& table, const TableSchema& schema);

// encode() with continuous values outside the training range clamped into the
// boundary buckets; used when scoring tables the schema was not built from.
EncodedMatrix encode_clamped(const RawTable& table, const TableSchema& schema);

enum class DecodeMode { midpoint, uniform };

// Inverse of the discretization: categorical indices map back to their label,
// continuous ones to the bucket midpoint or to a uniform draw in the bucket.
std::vector<std::string> decode_row(std::span<const std::int32_t> indices,
                                    const TableSchema& schema, DecodeMode mode, Rng& rng);
RawTable decode_table(const IndexRows& rows, const TableSchema& schema, DecodeMode mode, Rng& rng);

// w_c = N / (K * (count_c + 1)); add-one smoothing keeps empty categories finite.
CategoryWeights compute_weights(const EncodedMatrix& encoded, const TableSchema& schema);

MarginalSet marginals_of(const EncodedMatrix& encoded);
MarginalSet marginals_of(const IndexRows& rows, const TableSchema& schema);

} // namespace psvae
