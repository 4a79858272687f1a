#include "psvae/vae.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace psvae {

std::array<DenseLayer*, VaeParams::n_layers> VaeParams::layers() {
    return {&enc1, &enc2, &head_mean, &head_logvar, &dec1, &dec2, &head_out};
}

std::array<const DenseLayer*, VaeParams::n_layers> VaeParams::layers() const {
    return {&enc1, &enc2, &head_mean, &head_logvar, &dec1, &dec2, &head_out};
}

VaeParams VaeParams::init(std::size_t input_width, std::size_t hidden_dim, std::size_t latent_dim,
                          Rng& rng) {
    VaeParams p;
    p.enc1 = DenseLayer::glorot(hidden_dim, input_width, rng);
    p.enc2 = DenseLayer::glorot(hidden_dim, hidden_dim, rng);
    p.head_mean = DenseLayer::glorot(latent_dim, hidden_dim, rng);
    p.head_logvar = DenseLayer::glorot(latent_dim, hidden_dim, rng);
    p.dec1 = DenseLayer::glorot(hidden_dim, latent_dim, rng);
    p.dec2 = DenseLayer::glorot(hidden_dim, hidden_dim, rng);
    p.head_out = DenseLayer::glorot(input_width, hidden_dim, rng);
    return p;
}

EncoderOut encode(const VaeParams& params, const Eigen::MatrixXd& x, bool with_derivatives) {
    EncoderOut out;
    out.pre1 = linear_forward(params.enc1, x);
    if (with_derivatives)
        mish_fused(out.pre1, out.act1, out.dact1);
    else
        out.act1 = mish(out.pre1.array()).matrix();
    out.pre2 = linear_forward(params.enc2, out.act1);
    if (with_derivatives)
        mish_fused(out.pre2, out.act2, out.dact2);
    else
        out.act2 = mish(out.pre2.array()).matrix();
    out.mean = linear_forward(params.head_mean, out.act2);
    out.logvar = linear_forward(params.head_logvar, out.act2);
    return out;
}

Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& eps) {
    if (mean.rows() != logvar.rows() || mean.cols() != logvar.cols() ||
        mean.rows() != eps.rows() || mean.cols() != eps.cols())
        throw DimensionError("reparameterize: shape mismatch");
    return (mean.array() + (0.5 * logvar.array()).exp() * eps.array()).matrix();
}

DecoderOut decode(const VaeParams& params, const Eigen::MatrixXd& z, bool with_derivatives) {
    DecoderOut out;
    out.pre1 = linear_forward(params.dec1, z);
    if (with_derivatives)
        mish_fused(out.pre1, out.act1, out.dact1);
    else
        out.act1 = mish(out.pre1.array()).matrix();
    out.pre2 = linear_forward(params.dec2, out.act1);
    if (with_derivatives)
        mish_fused(out.pre2, out.act2, out.dact2);
    else
        out.act2 = mish(out.pre2.array()).matrix();
    out.logits = linear_forward(params.head_out, out.act2);
    return out;
}

ReconLoss reconstruction_loss(const Eigen::MatrixXd& logits, const IndexBatch& targets,
                              const CategoryWeights& weights, const TableSchema& schema) {
    const auto offsets = schema.group_offsets();
    if (static_cast<std::size_t>(logits.cols()) != offsets.back())
        throw DimensionError("reconstruction_loss: logit width does not match schema");
    if (targets.rows() != logits.rows() ||
        static_cast<std::size_t>(targets.cols()) != schema.columns.size())
        throw DimensionError("reconstruction_loss: target shape mismatch");

    const Eigen::Index rows = logits.rows();
    const double inv_rows = 1.0 / static_cast<double>(rows);

    ReconLoss out;
    out.grad_logits.resize(rows, logits.cols());

    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const Eigen::Index off = static_cast<Eigen::Index>(offsets[c]);
        const Eigen::Index k = static_cast<Eigen::Index>(offsets[c + 1] - offsets[c]);
        const auto block = logits.middleCols(off, k);
        auto grad_block = out.grad_logits.middleCols(off, k);
        const Eigen::VectorXd& w = weights.per_column[c];

        const Eigen::VectorXd mx = block.rowwise().maxCoeff();
        Eigen::ArrayXXd ex = (block.colwise() - mx).array().exp();
        const Eigen::ArrayXd z = ex.rowwise().sum();

        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::Index target = targets(r, static_cast<Eigen::Index>(c));
            const double wr = w[target];
            out.value += -wr * (block(r, target) - mx[r] - std::log(z[r]));
            grad_block.row(r) = (wr * inv_rows / z[r]) * ex.row(r).matrix();
            grad_block(r, target) -= wr * inv_rows;
        }
    }
    out.value *= inv_rows;
    return out;
}

double adjust_beta(double kl_sum, double re_sum, double beta, double target_fraction,
                   double factor) {
    const double target = target_fraction * (kl_sum + re_sum);
    return kl_sum > target ? beta * factor : beta / factor;
}

BatchLosses vae_losses(const VaeParams& params, const Eigen::MatrixXd& x_onehot,
                       const IndexBatch& targets, const Eigen::MatrixXd& eps,
                       const CategoryWeights& weights, const TableSchema& schema, double beta,
                       VaeGrads* grads) {
    const bool training = grads != nullptr;
    const EncoderOut enc = encode(params, x_onehot, training);
    const Eigen::MatrixXd z = reparameterize(enc.mean, enc.logvar, eps);
    const DecoderOut dec = decode(params, z, training);

    const ReconLoss re = reconstruction_loss(dec.logits, targets, weights, schema);
    const GaussianKl kl = gaussian_kl(enc.mean, enc.logvar);

    BatchLosses losses{re.value, kl.value};
    if (!grads)
        return losses;

    // decoder
    LinearGrads g_out = linear_backward(params.head_out, dec.act2, re.grad_logits);
    LinearGrads g_dec2 =
        linear_backward(params.dec2, dec.act1, g_out.input.cwiseProduct(dec.dact2));
    LinearGrads g_dec1 = linear_backward(params.dec1, z, g_dec2.input.cwiseProduct(dec.dact1));

    // through the reparameterization, plus the scaled KL terms
    const Eigen::MatrixXd& grad_z = g_dec1.input;
    Eigen::MatrixXd grad_mean = grad_z + beta * kl.grad_mean;
    Eigen::MatrixXd grad_logvar =
        (grad_z.array() * eps.array() * (0.5 * enc.logvar.array()).exp() * 0.5).matrix() +
        beta * kl.grad_logvar;

    // encoder
    LinearGrads g_hm = linear_backward(params.head_mean, enc.act2, grad_mean);
    LinearGrads g_hl = linear_backward(params.head_logvar, enc.act2, grad_logvar);
    Eigen::MatrixXd grad_act2 = g_hm.input + g_hl.input;
    LinearGrads g_enc2 =
        linear_backward(params.enc2, enc.act1, grad_act2.cwiseProduct(enc.dact2));
    LinearGrads g_enc1 =
        linear_backward(params.enc1, x_onehot, g_enc2.input.cwiseProduct(enc.dact1));

    auto move_into = [](LayerGrad& dst, LinearGrads&& src) {
        dst.weights = std::move(src.weights);
        dst.bias = std::move(src.bias);
    };
    move_into(grads->blocks[0], std::move(g_enc1));
    move_into(grads->blocks[1], std::move(g_enc2));
    move_into(grads->blocks[2], std::move(g_hm));
    move_into(grads->blocks[3], std::move(g_hl));
    move_into(grads->blocks[4], std::move(g_dec1));
    move_into(grads->blocks[5], std::move(g_dec2));
    move_into(grads->blocks[6], std::move(g_out));
    return losses;
}

namespace {

Eigen::MatrixXd onehot_batch(const EncodedMatrix& data, std::span<const std::size_t> rows) {
    return data.dense_rows(rows);
}

IndexBatch index_batch(const EncodedMatrix& data, std::span<const std::size_t> rows) {
    IndexBatch b(rows.size(), data.n_columns());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < data.n_columns(); ++c)
            b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                data.index(rows[r], c);
    return b;
}

} // namespace

std::pair<VaeParams, TrainLog> fit(const EncodedMatrix& data, const CategoryWeights& weights,
                                   const TableSchema& schema, const TrainConfig& config,
                                   const EpochCallback& on_epoch) {
    if (data.rows() == 0)
        throw DataError("fit error: empty dataset");
    if (config.epochs == 0 || config.batch_size == 0 || config.latent_dim == 0 ||
        config.hidden_dim == 0)
        throw DimensionError("fit error: epochs, batch_size and layer sizes must be positive");
    if (!(config.learning_rate > 0.0) || !(config.beta_init > 0.0) ||
        !(config.beta_factor > 0.0) ||
        !(config.kl_target_fraction > 0.0 && config.kl_target_fraction < 1.0))
        throw DimensionError("fit error: invalid training hyperparameters");

    Rng init_rng = named_stream(config.seed, "init");
    Rng shuffle_rng = named_stream(config.seed, "shuffle");
    Rng latent_rng = named_stream(config.seed, "latent");

    VaeParams params =
        VaeParams::init(data.total_width(), config.hidden_dim, config.latent_dim, init_rng);
    params.beta = config.beta_init;

    AdamParams hp;
    hp.learning_rate = config.learning_rate;
    std::array<AdamState, VaeParams::n_layers> w_states;
    std::array<AdamState, VaeParams::n_layers> b_states;
    {
        auto blocks = params.layers();
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            w_states[i] = AdamState::like(blocks[i]->weights);
            b_states[i] = AdamState::like(blocks[i]->bias);
        }
    }

    const std::size_t n = data.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainLog log;
    log.reserve(config.epochs);
    VaeGrads grads;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        double kl_sum = 0.0;
        double re_sum = 0.0;

        if (config.sample_with_replacement) {
            for (auto& i : order)
                i = static_cast<std::size_t>(shuffle_rng.below(n));
        } else {
            shuffle_rng.shuffle(order);
        }

        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size, ++batch_index) {
            const std::size_t count = std::min(config.batch_size, n - begin);
            const std::span<const std::size_t> rows(order.data() + begin, count);

            const Eigen::MatrixXd x = onehot_batch(data, rows);
            const IndexBatch targets = index_batch(data, rows);
            Eigen::MatrixXd eps(count, config.latent_dim);
            for (Eigen::Index r = 0; r < eps.rows(); ++r)
                for (Eigen::Index c = 0; c < eps.cols(); ++c)
                    eps(r, c) = latent_rng.normal();

            const BatchLosses losses =
                vae_losses(params, x, targets, eps, weights, schema, params.beta, &grads);
            if (!std::isfinite(losses.re) || !std::isfinite(losses.kl))
                throw NumericError("fit error: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index + 1));

            auto blocks = params.layers();
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                adam_step(VaeParams::layer_names[i], blocks[i]->weights, grads.blocks[i].weights,
                          w_states[i], hp);
                adam_step(VaeParams::layer_names[i], blocks[i]->bias, grads.blocks[i].bias,
                          b_states[i], hp);
            }

            kl_sum += losses.kl;
            re_sum += losses.re;
        }

        if (config.adjust_beta)
            params.beta = adjust_beta(kl_sum, re_sum, params.beta, config.kl_target_fraction,
                                      config.beta_factor);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.kl_sum = kl_sum;
        rec.re_sum = re_sum;
        rec.beta_after = params.beta;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.push_back(rec);
        if (on_epoch)
            on_epoch(rec);
    }
    return {std::move(params), std::move(log)};
}

} // namespace psvae
