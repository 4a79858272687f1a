#include "psvae/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace psvae {

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["l1"] = l1;
    j["rho"] = rho;
    j["f1"] = f1;
    j["identity_f1"] = identity_f1 ? nlohmann::json(*identity_f1) : nlohmann::json(nullptr);
    j["epoch_seconds"] = epoch_seconds ? nlohmann::json(*epoch_seconds) : nlohmann::json(nullptr);
    j["dataset"] = dataset;
    j["model"] = model;
    j["seed"] = seed;
    return j.dump();
}

double l1_metric(const RawTable& real, const RawTable& syn, const TableSchema& schema) {
    if (real.n_rows() == 0 || syn.n_rows() == 0)
        throw DataError("eval error: empty table");
    const MarginalSet rm = marginals_of(encode_clamped(real, schema));
    const MarginalSet sm = marginals_of(encode_clamped(syn, schema));
    return marginal_distance(sm, rm) / static_cast<double>(schema.columns.size());
}

namespace {

// Numeric view of a column: raw values for continuous columns, schema
// category indices otherwise.
std::vector<double> numeric_view(const RawColumn& col, const ColumnSchema& scol) {
    if (scol.kind == ColumnKind::continuous) {
        if (!col.numeric)
            throw DataError("eval error: column '" + col.name + "' is not numeric");
        return col.values;
    }
    CategoryResolver lookup(scol);
    std::vector<double> out;
    out.reserve(col.cells.size());
    for (const auto& cell : col.cells)
        out.push_back(static_cast<double>(lookup.index_of(cell)));
    return out;
}

// Pearson correlations of all column pairs; zero-variance columns yield 0.
Eigen::MatrixXd correlation_matrix(const std::vector<std::vector<double>>& cols) {
    const std::size_t k = cols.size();
    const std::size_t n = cols.front().size();
    Eigen::MatrixXd centered(n, k);
    for (std::size_t c = 0; c < k; ++c) {
        const double mean =
            std::accumulate(cols[c].begin(), cols[c].end(), 0.0) / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
            centered(r, c) = cols[c][r] - mean;
    }
    const Eigen::VectorXd norms = centered.colwise().norm();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (norms[i] > 0.0 && norms[j] > 0.0)
                corr(i, j) = centered.col(i).dot(centered.col(j)) / (norms[i] * norms[j]);
    return corr;
}

} // namespace

double pearson_rho_diff(const RawTable& real, const RawTable& syn, const TableSchema& schema) {
    if (real.n_rows() == 0 || syn.n_rows() == 0)
        throw DataError("eval error: empty table");
    if (real.columns.size() != schema.columns.size() || syn.columns.size() != schema.columns.size())
        throw DataError("eval error: table does not match schema column count");

    const std::size_t k = schema.columns.size();
    std::vector<std::vector<double>> rcols(k), scols(k);
    for (std::size_t c = 0; c < k; ++c) {
        rcols[c] = numeric_view(real.columns[c], schema.columns[c]);
        scols[c] = numeric_view(syn.columns[c], schema.columns[c]);
    }
    return (correlation_matrix(rcols) - correlation_matrix(scols)).cwiseAbs().sum();
}

namespace {

struct ClassifierData {
    Eigen::MatrixXd features; // rows x (total_width - target cardinality)
    std::vector<std::int32_t> labels;
    std::size_t n_classes = 0;
};

ClassifierData classifier_data(const RawTable& table, const TableSchema& schema,
                               std::size_t target) {
    const EncodedMatrix enc = encode_clamped(table, schema);
    const auto offsets = schema.group_offsets();
    const std::size_t target_off = offsets[target];
    const std::size_t target_k = offsets[target + 1] - offsets[target];

    ClassifierData data;
    data.n_classes = target_k;
    data.features = Eigen::MatrixXd::Zero(table.n_rows(), enc.total_width() - target_k);
    data.labels.resize(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            if (c == target) {
                data.labels[r] = enc.index(r, c);
                continue;
            }
            std::size_t pos = offsets[c] + enc.index(r, c);
            if (pos >= target_off)
                pos -= target_k;
            data.features(r, pos) = 1.0;
        }
    }
    return data;
}

struct Mlp {
    std::vector<DenseLayer> layers; // hidden..., output

    Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd h = x;
        for (std::size_t i = 0; i + 1 < layers.size(); ++i)
            h = mish(linear_forward(layers[i], h).array()).matrix();
        return linear_forward(layers.back(), h);
    }
};

Mlp train_classifier(const ClassifierData& data, const ClassifierConfig& config, Rng& rng) {
    Mlp net;
    std::size_t in = static_cast<std::size_t>(data.features.cols());
    for (std::size_t width : config.hidden) {
        net.layers.push_back(DenseLayer::glorot(width, in, rng));
        in = width;
    }
    net.layers.push_back(DenseLayer::glorot(data.n_classes, in, rng));

    const Eigen::VectorXd ce_weights = Eigen::VectorXd::Ones(data.n_classes);
    AdamParams hp;
    hp.learning_rate = config.learning_rate;
    std::vector<AdamState> w_states, b_states;
    for (const auto& l : net.layers) {
        w_states.push_back(AdamState::like(l.weights));
        b_states.push_back(AdamState::like(l.bias));
    }

    const std::size_t n = static_cast<std::size_t>(data.features.rows());
    const std::size_t batch = std::min(config.batch_size, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<Eigen::MatrixXd> pre(net.layers.size());
    std::vector<Eigen::MatrixXd> act(net.layers.size() + 1);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const std::size_t count = std::min(batch, n - begin);
            Eigen::MatrixXd x(count, data.features.cols());
            Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(count, data.n_classes);
            for (std::size_t r = 0; r < count; ++r) {
                x.row(r) = data.features.row(order[begin + r]);
                onehot(r, data.labels[order[begin + r]]) = 1.0;
            }

            act[0] = std::move(x);
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                pre[i] = linear_forward(net.layers[i], act[i]);
                act[i + 1] = i + 1 < net.layers.size() ? mish(pre[i].array()).matrix() : pre[i];
            }

            const LossGrad loss = weighted_softmax_ce(act.back(), onehot, ce_weights);
            Eigen::MatrixXd upstream = loss.grad;
            for (std::size_t i = net.layers.size(); i-- > 0;) {
                LinearGrads g = linear_backward(net.layers[i], act[i], upstream);
                if (i > 0)
                    upstream = mish_backward(pre[i - 1], g.input);
                adam_step("classifier_w", net.layers[i].weights, g.weights, w_states[i], hp);
                adam_step("classifier_b", net.layers[i].bias, g.bias, b_states[i], hp);
            }
        }
    }
    return net;
}

// Macro over the classes present in either the truth or the predictions;
// a class never predicted but present in the truth scores 0.
double macro_f1(const std::vector<std::int32_t>& truth, const std::vector<std::int32_t>& pred,
                std::size_t n_classes) {
    std::vector<std::int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
    std::set<std::int32_t> classes;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        classes.insert(truth[i]);
        classes.insert(pred[i]);
        if (truth[i] == pred[i])
            ++tp[truth[i]];
        else {
            ++fp[pred[i]];
            ++fn[truth[i]];
        }
    }
    double sum = 0.0;
    for (std::int32_t c : classes) {
        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        sum += denom > 0 ? 2.0 * static_cast<double>(tp[c]) / denom : 0.0;
    }
    return classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
}

double evaluate_classifier(const Mlp& net, const ClassifierData& test) {
    const Eigen::MatrixXd logits = net.logits(test.features);
    std::vector<std::int32_t> pred(test.labels.size());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best;
        logits.row(r).maxCoeff(&best);
        pred[r] = static_cast<std::int32_t>(best);
    }
    return macro_f1(test.labels, pred, test.n_classes);
}

std::size_t resolve_target(const TableSchema& schema, const ClassifierConfig& config) {
    const int idx = schema.column_index(config.target_column);
    if (idx < 0)
        throw DataError("config error: target column '" + config.target_column +
                        "' does not exist");
    return static_cast<std::size_t>(idx);
}

} // namespace

double f1_cross(const RawTable& train, const RawTable& test, const TableSchema& schema,
                const ClassifierConfig& config, Rng& rng) {
    const std::size_t target = resolve_target(schema, config);
    const ClassifierData train_data = classifier_data(train, schema, target);
    const ClassifierData test_data = classifier_data(test, schema, target);
    const Mlp net = train_classifier(train_data, config, rng);
    return evaluate_classifier(net, test_data);
}

double identity_f1(const RawTable& real, const TableSchema& schema, const ClassifierConfig& config,
                   double split, Rng& rng) {
    const std::size_t target = resolve_target(schema, config);
    const ClassifierData all = classifier_data(real, schema, target);

    const std::size_t n = static_cast<std::size_t>(all.features.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::size_t train_n =
        static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
    if (train_n == 0 || train_n == n)
        throw DataError("eval error: split leaves an empty train or test set");

    auto subset = [&](std::size_t begin, std::size_t end) {
        ClassifierData d;
        d.n_classes = all.n_classes;
        d.features.resize(end - begin, all.features.cols());
        d.labels.resize(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            d.features.row(i - begin) = all.features.row(order[i]);
            d.labels[i - begin] = all.labels[order[i]];
        }
        return d;
    };
    const ClassifierData train_data = subset(0, train_n);
    const ClassifierData test_data = subset(train_n, n);
    const Mlp net = train_classifier(train_data, config, rng);
    return evaluate_classifier(net, test_data);
}

} // namespace psvae
