#pragma once

#include "psvae/post_selection.hpp"

#include <optional>
#include <string>

namespace psvae {

struct MetricsReport {
    double l1 = 0.0;
    double rho = 0.0;
    double f1 = 0.0;
    std::optional<double> identity_f1;
    std::optional<std::vector<double>> epoch_seconds;
    std::string dataset;
    std::string model;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

// Mean over columns of the L1 distance between the two per-column category
// distributions; continuous columns are compared on the schema's buckets.
double l1_metric(const RawTable& real, const RawTable& syn, const TableSchema& schema);

// Sum over unordered column pairs of |pearson_real - pearson_syn|, with
// categorical labels mapped to their schema category index. A zero-variance
// column contributes r = 0 for that table.
double pearson_rho_diff(const RawTable& real, const RawTable& syn, const TableSchema& schema);

struct ClassifierConfig {
    std::string target_column;
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t epochs = 30;
    double learning_rate = 1e-3;
    std::size_t batch_size = 500;
};

// Train an MLP on `train`, score macro-F1 of the target column on `test`.
// Features are the one-hot encodings of all non-target columns.
double f1_cross(const RawTable& train, const RawTable& test, const TableSchema& schema,
                const ClassifierConfig& config, Rng& rng);

// Macro-F1 of a classifier trained on `split` of the rows and tested on the
// rest of the same table.
double identity_f1(const RawTable& real, const TableSchema& schema, const ClassifierConfig& config,
                   double split, Rng& rng);

} // namespace psvae
