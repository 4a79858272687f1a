#include "psvae/encoding.hpp"

#include "psvae/errors.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

namespace psvae {

EncodedMatrix::EncodedMatrix(std::size_t rows, const TableSchema& schema)
    : indices_(rows, schema.columns.size()), group_offsets_(schema.group_offsets()) {
    indices_.setZero();
    cardinalities_.reserve(schema.columns.size());
    for (const auto& c : schema.columns)
        cardinalities_.push_back(static_cast<std::int32_t>(c.cardinality()));
}

void EncodedMatrix::set_index(std::size_t row, std::size_t column, std::int32_t category) {
    if (category < 0 || category >= cardinalities_[column])
        throw DimensionError("encode error: category index out of range");
    indices_(row, column) = category;
}

IndexRow EncodedMatrix::index_row(std::size_t row) const {
    IndexRow r(n_columns());
    for (std::size_t c = 0; c < r.size(); ++c)
        r[c] = indices_(row, c);
    return r;
}

Eigen::MatrixXd EncodedMatrix::dense_rows(std::span<const std::size_t> row_ids) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(row_ids.size(), total_width());
    for (std::size_t r = 0; r < row_ids.size(); ++r)
        for (std::size_t c = 0; c < n_columns(); ++c)
            out(r, group_offsets_[c] + indices_(row_ids[r], c)) = 1.0;
    return out;
}

Eigen::MatrixXd EncodedMatrix::dense() const {
    std::vector<std::size_t> all(rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return dense_rows(all);
}

CategoryResolver::CategoryResolver(const ColumnSchema& col) : col_(&col) {
    by_label_.reserve(col.categories.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < col.categories.size(); ++i) {
        by_label_.emplace(col.categories[i], static_cast<std::int32_t>(i));
        double v;
        if (all_numeric && parse_double(col.categories[i], v))
            by_value_.emplace(v, static_cast<std::int32_t>(i));
        else
            all_numeric = false;
    }
    if (!all_numeric)
        by_value_.clear();
}

std::int32_t CategoryResolver::index_of(const std::string& cell) const {
    if (auto it = by_label_.find(cell); it != by_label_.end())
        return it->second;
    double v;
    if (!by_value_.empty() && parse_double(cell, v))
        if (auto it = by_value_.find(v); it != by_value_.end())
            return it->second;
    throw DataError("encode error: column '" + col_->name + "' has unseen label '" + cell + "'");
}

namespace {

EncodedMatrix encode_impl(const RawTable& table, const TableSchema& schema, bool clamp) {
    if (table.columns.size() != schema.columns.size())
        throw DataError("encode error: table has " + std::to_string(table.columns.size()) +
                        " columns, schema expects " + std::to_string(schema.columns.size()));
    const std::size_t rows = table.n_rows();
    EncodedMatrix out(rows, schema);

    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const auto& scol = schema.columns[c];
        const auto& tcol = table.columns[c];
        if (tcol.name != scol.name)
            throw DataError("encode error: column '" + tcol.name + "' does not match schema column '" +
                            scol.name + "'");
        if (scol.kind == ColumnKind::continuous) {
            if (!tcol.numeric)
                throw DataError("encode error: column '" + tcol.name + "' is not numeric");
            for (std::size_t r = 0; r < rows; ++r) {
                if (!std::isfinite(tcol.values[r]))
                    throw DataError("encode error: non-finite value in column '" + tcol.name +
                                    "' at row " + std::to_string(r + 1));
                const std::size_t bucket = clamp ? bucket_index_clamped(scol, tcol.values[r])
                                                 : bucket_index(scol, tcol.values[r]);
                out.set_index(r, c, static_cast<std::int32_t>(bucket));
            }
        } else {
            CategoryResolver lookup(scol);
            for (std::size_t r = 0; r < rows; ++r) {
                if (tcol.cells[r].empty())
                    throw DataError("encode error: missing value in column '" + tcol.name +
                                    "' at row " + std::to_string(r + 1));
                out.set_index(r, c, lookup.index_of(tcol.cells[r]));
            }
        }
    }
    return out;
}

} // namespace

EncodedMatrix encode(const RawTable& table, const TableSchema& schema) {
    return encode_impl(table, schema, false);
}

EncodedMatrix encode_clamped(const RawTable& table, const TableSchema& schema) {
    return encode_impl(table, schema, true);
}

std::vector<std::string> decode_row(std::span<const std::int32_t> indices,
                                    const TableSchema& schema, DecodeMode mode, Rng& rng) {
    if (indices.size() != schema.columns.size())
        throw DimensionError("decode error: row has wrong column count");
    std::vector<std::string> cells;
    cells.reserve(indices.size());
    for (std::size_t c = 0; c < indices.size(); ++c) {
        const auto& col = schema.columns[c];
        const auto idx = indices[c];
        if (idx < 0 || static_cast<std::size_t>(idx) >= col.cardinality())
            throw DataError("decode error: index " + std::to_string(idx) +
                            " out of range for column '" + col.name + "'");
        if (col.kind == ColumnKind::categorical) {
            cells.push_back(col.categories[idx]);
        } else {
            const double lo = col.bucket_edges[idx];
            const double hi = col.bucket_edges[idx + 1];
            const double v = mode == DecodeMode::midpoint ? 0.5 * (lo + hi) : rng.uniform(lo, hi);
            cells.push_back(format_double(v));
        }
    }
    return cells;
}

RawTable decode_table(const IndexRows& rows, const TableSchema& schema, DecodeMode mode, Rng& rng) {
    RawTable table;
    table.columns.resize(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        table.columns[c].name = schema.columns[c].name;
        table.columns[c].cells.reserve(rows.size());
    }
    for (const auto& row : rows) {
        auto cells = decode_row(row, schema, mode, rng);
        for (std::size_t c = 0; c < cells.size(); ++c)
            table.columns[c].cells.push_back(std::move(cells[c]));
    }
    for (auto& col : table.columns) {
        col.numeric = !col.cells.empty();
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

CategoryWeights compute_weights(const EncodedMatrix& encoded, const TableSchema& schema) {
    if (encoded.rows() == 0)
        throw DataError("weights error: empty encoded matrix");
    const MarginalSet m = marginals_of(encoded);
    const double n = static_cast<double>(encoded.rows());

    CategoryWeights w;
    w.per_column.reserve(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const double k = static_cast<double>(schema.columns[c].cardinality());
        Eigen::VectorXd wc(m.counts[c].size());
        for (std::size_t i = 0; i < m.counts[c].size(); ++i)
            wc[i] = n / (k * (static_cast<double>(m.counts[c][i]) + 1.0));
        w.per_column.push_back(std::move(wc));
    }
    return w;
}

MarginalSet marginals_of(const EncodedMatrix& encoded) {
    MarginalSet m;
    m.total = static_cast<std::int64_t>(encoded.rows());
    m.counts.resize(encoded.n_columns());
    const auto& offs = encoded.group_offsets();
    for (std::size_t c = 0; c < encoded.n_columns(); ++c)
        m.counts[c].assign(offs[c + 1] - offs[c], 0);
    for (std::size_t r = 0; r < encoded.rows(); ++r)
        for (std::size_t c = 0; c < encoded.n_columns(); ++c)
            ++m.counts[c][encoded.index(r, c)];
    return m;
}

MarginalSet marginals_of(const IndexRows& rows, const TableSchema& schema) {
    MarginalSet m;
    m.total = static_cast<std::int64_t>(rows.size());
    m.counts.resize(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c)
        m.counts[c].assign(schema.columns[c].cardinality(), 0);
    for (const auto& row : rows) {
        if (row.size() != schema.columns.size())
            throw DimensionError("marginals error: row has wrong column count");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] < 0 || static_cast<std::size_t>(row[c]) >= m.counts[c].size())
                throw DimensionError("marginals error: category index out of range");
            ++m.counts[c][row[c]];
        }
    }
    return m;
}

} // namespace psvae
