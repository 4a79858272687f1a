#pragma once

#include "psvae/encoding.hpp"
#include "psvae/numerics.hpp"

#include <array>
#include <functional>
#include <utility>

namespace psvae {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 500;
    double learning_rate = 1e-3;
    double beta_init = 1.0;
    double beta_factor = 1.04;
    double kl_target_fraction = 1.0 / 3.0;
    std::uint64_t seed = 0;
    std::size_t latent_dim = 128;
    std::size_t hidden_dim = 256;
    bool adjust_beta = true;             // frozen beta is an ablation/test configuration
    bool sample_with_replacement = false;
};

// Encoder input -> hidden -> hidden -> {mean, logvar} heads, symmetric
// decoder from the latent back to the one-hot width. Mish between hidden
// layers only; the heads and the output layer stay linear.
struct VaeParams {
    DenseLayer enc1, enc2, head_mean, head_logvar;
    DenseLayer dec1, dec2, head_out;
    double beta = 1.0;

    std::size_t input_width() const { return enc1.in_dim(); }
    std::size_t latent_dim() const { return head_mean.out_dim(); }
    std::size_t hidden_dim() const { return enc1.out_dim(); }

    static constexpr std::size_t n_layers = 7;
    static constexpr std::array<const char*, n_layers> layer_names = {
        "enc1", "enc2", "head_mean", "head_logvar", "dec1", "dec2", "head_out"};
    std::array<DenseLayer*, n_layers> layers();
    std::array<const DenseLayer*, n_layers> layers() const;

    static VaeParams init(std::size_t input_width, std::size_t hidden_dim, std::size_t latent_dim,
                          Rng& rng);
};

struct EncoderOut {
    Eigen::MatrixXd mean, logvar;           // batch x latent
    Eigen::MatrixXd pre1, act1, pre2, act2; // tape for the backward pass
    Eigen::MatrixXd dact1, dact2;           // mish'(pre), filled when requested
};

struct DecoderOut {
    Eigen::MatrixXd logits; // batch x total_width
    Eigen::MatrixXd pre1, act1, pre2, act2;
    Eigen::MatrixXd dact1, dact2;
};

EncoderOut encode(const VaeParams& params, const Eigen::MatrixXd& x,
                  bool with_derivatives = false);

// z = mean + exp(logvar / 2) .* eps
Eigen::MatrixXd reparameterize(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& logvar,
                               const Eigen::MatrixXd& eps);

DecoderOut decode(const VaeParams& params, const Eigen::MatrixXd& z,
                  bool with_derivatives = false);

using IndexBatch = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>; // rows x columns

struct ReconLoss {
    double value = 0.0;
    Eigen::MatrixXd grad_logits;
};

// Sum over column groups of the weighted softmax cross entropy on that
// group's logit slice; targets are category indices per column.
ReconLoss reconstruction_loss(const Eigen::MatrixXd& logits, const IndexBatch& targets,
                              const CategoryWeights& weights, const TableSchema& schema);

// s = kl_sum + re_sum; beta *= factor when kl_sum > s * target_fraction,
// beta /= factor otherwise (strict inequality).
double adjust_beta(double kl_sum, double re_sum, double beta, double target_fraction = 1.0 / 3.0,
                   double factor = 1.04);

struct LayerGrad {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct VaeGrads {
    std::array<LayerGrad, VaeParams::n_layers> blocks; // same order as layer_names
};

struct BatchLosses {
    double re = 0.0;
    double kl = 0.0;
};

// One forward/backward pass of L_RE + beta * L_KL on a batch with fixed
// noise. Returns the two batch-mean losses; fills `grads` when non-null.
BatchLosses vae_losses(const VaeParams& params, const Eigen::MatrixXd& x_onehot,
                       const IndexBatch& targets, const Eigen::MatrixXd& eps,
                       const CategoryWeights& weights, const TableSchema& schema, double beta,
                       VaeGrads* grads);

struct EpochRecord {
    std::size_t epoch = 0;   // 1-based
    double kl_sum = 0.0;     // epoch sum of batch-mean KL losses
    double re_sum = 0.0;     // epoch sum of batch-mean reconstruction losses
    double beta_after = 0.0; // beta after this epoch's adjustment
    double seconds = 0.0;
};

using TrainLog = std::vector<EpochRecord>;
using EpochCallback = std::function<void(const EpochRecord&)>;

std::pair<VaeParams, TrainLog> fit(const EncodedMatrix& data, const CategoryWeights& weights,
                                   const TableSchema& schema, const TrainConfig& config,
                                   const EpochCallback& on_epoch = nullptr);

} // namespace psvae
