#pragma once

#include "psvae/vae.hpp"

namespace psvae {

// Summed per-column L1 between the two empirical category distributions.
double marginal_distance(const MarginalSet& syn, const MarginalSet& real);

// Working synthetic set: rows plus marginal counts kept in lock step.
class SampleSet {
public:
    SampleSet() = default;
    SampleSet(IndexRows rows, const TableSchema& schema);

    const IndexRows& rows() const { return rows_; }
    const MarginalSet& marginals() const { return marginals_; }
    std::size_t size() const { return rows_.size(); }

    void replace_row(std::size_t row, const IndexRow& candidate);

private:
    IndexRows rows_;
    MarginalSet marginals_;
};

// (distance before) - (distance after) for replacing one row. All distances
// share the denominator syn_total * real_total, so `scaled` carries the exact
// integer numerator of the delta; only the <= 2 touched categories per column
// are visited.
struct InfluenceDelta {
    double delta = 0.0;
    std::int64_t scaled = 0;
};

InfluenceDelta influence(const SampleSet& samples, const MarginalSet& real, std::size_t row,
                         const IndexRow& candidate);

enum class SelectionMode { categorical, argmax };

// Decode n latent draws from N(0, I) into category-index rows, selecting per
// column from the softmax of that group's logits (or its argmax). Latents are
// decoded in chunks of 500 rows to bound the dense batch size.
IndexRows decode_batch(const VaeParams& params, std::size_t n, const TableSchema& schema,
                       Rng& rng, SelectionMode mode = SelectionMode::categorical);

// Distance after every proposal, and whether the proposal was accepted.
struct PostSelectTrace {
    std::vector<double> distances;
    std::vector<bool> accepted;
};

struct PostSelectResult {
    SampleSet samples;
    std::vector<std::size_t> accepted_per_cycle;
    double initial_distance = 0.0;
    double final_distance = 0.0;
};

// Initialize S with a decoded batch, then per cycle propose a fresh batch
// positionally and accept each replacement iff it strictly improves the
// marginal distance to `real`.
PostSelectResult post_select(const VaeParams& params, const TableSchema& schema,
                             const MarginalSet& real, std::size_t n, std::size_t cycles, Rng& rng,
                             SelectionMode mode = SelectionMode::categorical,
                             PostSelectTrace* trace = nullptr);

} // namespace psvae
