#include "psvae/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace psvae {

namespace {

constexpr char magic[5] = {'P', 'S', 'V', 'A', 'E'};
constexpr std::uint32_t format_version = 1;

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; byte swapping is not implemented");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in)
        throw DataError("load error: truncated model file");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto len = get<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in)
        throw DataError("load error: truncated model file");
    return s;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd get_matrix(std::istream& in) {
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in)
        throw DataError("load error: truncated model file");
    return m;
}

void put_layer(std::ostream& out, const DenseLayer& layer) {
    put_matrix(out, layer.weights);
    put_matrix(out, layer.bias);
}

DenseLayer get_layer(std::istream& in) {
    DenseLayer l;
    l.weights = get_matrix(in);
    const Eigen::MatrixXd b = get_matrix(in);
    if (b.cols() != 1 || b.rows() != l.weights.rows())
        throw DataError("load error: bias shape does not match layer");
    l.bias = b.col(0);
    return l;
}

} // namespace

void save_model(std::ostream& out, const ModelFile& model) {
    out.write(magic, sizeof(magic));
    put<std::uint32_t>(out, format_version);

    put<std::uint64_t>(out, model.schema.n_records);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.schema.columns.size()));
    for (const auto& col : model.schema.columns) {
        put_string(out, col.name);
        put<std::uint8_t>(out, col.kind == ColumnKind::continuous ? 1 : 0);
        if (col.kind == ColumnKind::continuous) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(col.bucket_edges.size()));
            for (double e : col.bucket_edges)
                put(out, e);
        } else {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(col.categories.size()));
            for (const auto& c : col.categories)
                put_string(out, c);
        }
    }

    for (const auto& wc : model.weights.per_column) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(wc.size()));
        for (Eigen::Index i = 0; i < wc.size(); ++i)
            put(out, wc[i]);
    }

    put<std::int64_t>(out, model.real_marginals.total);
    for (const auto& counts : model.real_marginals.counts) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(counts.size()));
        for (std::int64_t c : counts)
            put(out, c);
    }

    const TrainConfig& cfg = model.config;
    put<std::uint64_t>(out, cfg.epochs);
    put<std::uint64_t>(out, cfg.batch_size);
    put(out, cfg.learning_rate);
    put(out, cfg.beta_init);
    put(out, cfg.beta_factor);
    put(out, cfg.kl_target_fraction);
    put<std::uint64_t>(out, cfg.seed);
    put<std::uint64_t>(out, cfg.latent_dim);
    put<std::uint64_t>(out, cfg.hidden_dim);
    put<std::uint8_t>(out, cfg.adjust_beta ? 1 : 0);
    put<std::uint8_t>(out, cfg.sample_with_replacement ? 1 : 0);

    put(out, model.params.beta);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(VaeParams::n_layers));
    for (const DenseLayer* layer : model.params.layers())
        put_layer(out, *layer);

    if (!out)
        throw DataError("io error: failed to write model");
}

void save_model_file(const std::string& path, const ModelFile& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("io error: cannot open '" + path + "' for writing");
    save_model(out, model);
}

ModelFile load_model(std::istream& in) {
    char tag[sizeof(magic)];
    in.read(tag, sizeof(tag));
    if (!in || std::memcmp(tag, magic, sizeof(magic)) != 0)
        throw DataError("load error: not a PSVAE model file");
    const auto version = get<std::uint32_t>(in);
    if (version != format_version)
        throw DataError("load error: unsupported model format version " +
                        std::to_string(version) + " (expected " +
                        std::to_string(format_version) + ")");

    ModelFile model;
    model.schema.n_records = get<std::uint64_t>(in);
    const auto n_cols = get<std::uint32_t>(in);
    model.schema.columns.resize(n_cols);
    for (auto& col : model.schema.columns) {
        col.name = get_string(in);
        col.kind = get<std::uint8_t>(in) ? ColumnKind::continuous : ColumnKind::categorical;
        const auto count = get<std::uint32_t>(in);
        if (col.kind == ColumnKind::continuous) {
            col.bucket_edges.resize(count);
            for (auto& e : col.bucket_edges)
                e = get<double>(in);
            if (count < 2)
                throw DataError("load error: continuous column with fewer than two edges");
        } else {
            col.categories.resize(count);
            for (auto& c : col.categories)
                c = get_string(in);
            if (count == 0)
                throw DataError("load error: categorical column with no categories");
        }
    }

    model.weights.per_column.resize(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        auto& wc = model.weights.per_column[c];
        const auto count = get<std::uint32_t>(in);
        if (count != model.schema.columns[c].cardinality())
            throw DataError("load error: weight count does not match the schema");
        wc.resize(count);
        for (Eigen::Index i = 0; i < wc.size(); ++i)
            wc[i] = get<double>(in);
    }

    model.real_marginals.total = get<std::int64_t>(in);
    model.real_marginals.counts.resize(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        auto& counts = model.real_marginals.counts[c];
        const auto count = get<std::uint32_t>(in);
        if (count != model.schema.columns[c].cardinality())
            throw DataError("load error: marginal count does not match the schema");
        counts.resize(count);
        for (auto& v : counts)
            v = get<std::int64_t>(in);
    }

    TrainConfig& cfg = model.config;
    cfg.epochs = get<std::uint64_t>(in);
    cfg.batch_size = get<std::uint64_t>(in);
    cfg.learning_rate = get<double>(in);
    cfg.beta_init = get<double>(in);
    cfg.beta_factor = get<double>(in);
    cfg.kl_target_fraction = get<double>(in);
    cfg.seed = get<std::uint64_t>(in);
    cfg.latent_dim = get<std::uint64_t>(in);
    cfg.hidden_dim = get<std::uint64_t>(in);
    cfg.adjust_beta = get<std::uint8_t>(in) != 0;
    cfg.sample_with_replacement = get<std::uint8_t>(in) != 0;

    model.params.beta = get<double>(in);
    const auto n_layers = get<std::uint32_t>(in);
    if (n_layers != VaeParams::n_layers)
        throw DataError("load error: unexpected layer count");
    for (DenseLayer* layer : model.params.layers())
        *layer = get_layer(in);

    if (model.params.input_width() != model.schema.total_width())
        throw DataError("load error: model width does not match its schema");
    return model;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("io error: cannot open '" + path + "' for reading");
    return load_model(in);
}

} // namespace psvae
