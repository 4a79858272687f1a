#include "psvae/post_selection.hpp"

#include <cassert>
#include <cmath>
#include <cstdlib>

namespace psvae {

namespace {

// Exact numerator of the summed L1 over the common denominator n * m.
std::int64_t scaled_distance(const MarginalSet& syn, const MarginalSet& real) {
    if (syn.total <= 0 || real.total <= 0)
        throw DimensionError("marginal_distance: both totals must be positive");
    if (syn.counts.size() != real.counts.size())
        throw DimensionError("marginal_distance: column count mismatch");
    std::int64_t acc = 0;
    for (std::size_t c = 0; c < syn.counts.size(); ++c) {
        if (syn.counts[c].size() != real.counts[c].size())
            throw DimensionError("marginal_distance: category count mismatch in column " +
                                 std::to_string(c));
        for (std::size_t i = 0; i < syn.counts[c].size(); ++i)
            acc += std::abs(real.total * syn.counts[c][i] - syn.total * real.counts[c][i]);
    }
    return acc;
}

} // namespace

double marginal_distance(const MarginalSet& syn, const MarginalSet& real) {
    return static_cast<double>(scaled_distance(syn, real)) /
           (static_cast<double>(syn.total) * static_cast<double>(real.total));
}

SampleSet::SampleSet(IndexRows rows, const TableSchema& schema) : rows_(std::move(rows)) {
    marginals_ = marginals_of(rows_, schema);
}

void SampleSet::replace_row(std::size_t row, const IndexRow& candidate) {
    IndexRow& current = rows_.at(row);
    if (candidate.size() != current.size())
        throw DimensionError("replace_row: candidate has wrong column count");
    for (std::size_t c = 0; c < current.size(); ++c) {
        auto& counts = marginals_.counts[c];
        if (candidate[c] < 0 || static_cast<std::size_t>(candidate[c]) >= counts.size())
            throw DimensionError("replace_row: candidate index out of range");
        --counts[current[c]];
        ++counts[candidate[c]];
        assert(counts[current[c]] >= 0);
        current[c] = candidate[c];
    }
}

InfluenceDelta influence(const SampleSet& samples, const MarginalSet& real, std::size_t row,
                         const IndexRow& candidate) {
    const IndexRow& current = samples.rows().at(row);
    if (candidate.size() != current.size())
        throw DimensionError("influence: candidate has wrong column count");
    const MarginalSet& syn = samples.marginals();
    const std::int64_t n = syn.total;
    const std::int64_t m = real.total;

    InfluenceDelta out;
    for (std::size_t c = 0; c < current.size(); ++c) {
        const std::int32_t a = current[c];
        const std::int32_t b = candidate[c];
        if (a == b)
            continue;
        const auto& sc = syn.counts[c];
        const auto& rc = real.counts[c];
        const std::int64_t term_a = m * sc[a] - n * rc[a];
        const std::int64_t term_b = m * sc[b] - n * rc[b];
        out.scaled += std::abs(term_a) + std::abs(term_b);
        out.scaled -= std::abs(term_a - m) + std::abs(term_b + m);
    }
    out.delta = static_cast<double>(out.scaled) / (static_cast<double>(n) * static_cast<double>(m));
    return out;
}

IndexRows decode_batch(const VaeParams& params, std::size_t n, const TableSchema& schema,
                       Rng& rng, SelectionMode mode) {
    constexpr std::size_t chunk = 500;
    const auto offsets = schema.group_offsets();
    if (offsets.back() != params.input_width())
        throw DimensionError("decode_batch: schema width does not match the model");

    IndexRows rows;
    rows.reserve(n);
    const std::size_t latent = params.latent_dim();

    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t count = std::min(chunk, n - begin);
        Eigen::MatrixXd z(count, latent);
        for (Eigen::Index r = 0; r < z.rows(); ++r)
            for (Eigen::Index c = 0; c < z.cols(); ++c)
                z(r, c) = rng.normal();

        const Eigen::MatrixXd logits = decode(params, z).logits;

        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            IndexRow row(schema.columns.size());
            for (std::size_t c = 0; c < schema.columns.size(); ++c) {
                const Eigen::Index off = static_cast<Eigen::Index>(offsets[c]);
                const Eigen::Index k = static_cast<Eigen::Index>(offsets[c + 1] - offsets[c]);
                const auto group = logits.row(r).segment(off, k);
                if (mode == SelectionMode::argmax) {
                    Eigen::Index best;
                    group.maxCoeff(&best);
                    row[c] = static_cast<std::int32_t>(best);
                } else {
                    const Eigen::ArrayXd p = (group.array() - group.maxCoeff()).exp();
                    const double z_sum = p.sum();
                    double u = rng.uniform() * z_sum;
                    Eigen::Index pick = k - 1;
                    for (Eigen::Index i = 0; i < k; ++i) {
                        u -= p[i];
                        if (u < 0) {
                            pick = i;
                            break;
                        }
                    }
                    row[c] = static_cast<std::int32_t>(pick);
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

PostSelectResult post_select(const VaeParams& params, const TableSchema& schema,
                             const MarginalSet& real, std::size_t n, std::size_t cycles, Rng& rng,
                             SelectionMode mode, PostSelectTrace* trace) {
    if (n == 0)
        throw DimensionError("post_select: sample count must be positive");

    PostSelectResult result;
    result.samples = SampleSet(decode_batch(params, n, schema, rng, mode), schema);
    result.accepted_per_cycle.reserve(cycles);

    const double denom = static_cast<double>(n) * static_cast<double>(real.total);
    std::int64_t dist_scaled = scaled_distance(result.samples.marginals(), real);
    result.initial_distance = static_cast<double>(dist_scaled) / denom;

    for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
        const IndexRows candidates = decode_batch(params, n, schema, rng, mode);
        std::size_t accepted = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const InfluenceDelta delta = influence(result.samples, real, i, candidates[i]);
            if (delta.scaled > 0) {
                result.samples.replace_row(i, candidates[i]);
                dist_scaled -= delta.scaled;
                ++accepted;
            }
            if (trace) {
                trace->distances.push_back(static_cast<double>(dist_scaled) / denom);
                trace->accepted.push_back(delta.scaled > 0);
            }
        }
        result.accepted_per_cycle.push_back(accepted);
    }
    result.final_distance = static_cast<double>(dist_scaled) / denom;
    return result;
}

} // namespace psvae
