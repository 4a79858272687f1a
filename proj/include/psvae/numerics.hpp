#pragma once

#include "psvae/errors.hpp"
#include "psvae/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string_view>

namespace psvae {

// Overflow-free softplus: max(x,0) + log1p(exp(-|x|)).
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// x * tanh(softplus(x))
inline double mish(double x) { return x * std::tanh(softplus(x)); }

inline double mish_derivative(double x) {
    const double t = std::tanh(softplus(x));
    const double sigmoid = 0.5 * (1.0 + std::tanh(0.5 * x));
    return t + x * (1.0 - t * t) * sigmoid;
}

// Expression-friendly elementwise forms. tanh and the sigmoid are spelled in
// terms of exp of non-positive arguments: that keeps them overflow-free and on
// Eigen's vectorized double-precision exp path.
template <typename Derived>
auto softplus(const Eigen::ArrayBase<Derived>& x) {
    return x.max(0.0) + (-x.abs()).exp().log1p();
}

template <typename Derived>
Eigen::ArrayXXd mish(const Eigen::ArrayBase<Derived>& x) {
    // softplus(x) >= 0, so tanh(sp) = (1 - e^(-2 sp)) / (1 + e^(-2 sp))
    const Eigen::ArrayXXd u = (-2.0 * softplus(x)).exp();
    return x * (1.0 - u) / (1.0 + u);
}

template <typename Derived>
Eigen::ArrayXXd mish_derivative(const Eigen::ArrayBase<Derived>& x) {
    const Eigen::ArrayXXd u = (-2.0 * softplus(x)).exp();
    const Eigen::ArrayXXd t = (1.0 - u) / (1.0 + u);
    const Eigen::ArrayXXd v = (-x.abs()).exp();
    const Eigen::ArrayXXd sigmoid = (x >= 0.0).select(1.0 / (1.0 + v), v / (1.0 + v));
    return t + x * (1.0 - t.square()) * sigmoid;
}

// upstream .* mish'(x)
Eigen::MatrixXd mish_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& upstream);

// Value and derivative in one pass; the two share their exponentials, which
// matters on the training hot path.
void mish_fused(const Eigen::MatrixXd& x, Eigen::MatrixXd& value, Eigen::MatrixXd& derivative);

struct DenseLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;    // out

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }

    // Uniform in +-sqrt(6 / (in + out)), bias zero.
    static DenseLayer glorot(std::size_t out, std::size_t in, Rng& rng);
};

// Rows are samples: out = input * W^T + b.
Eigen::MatrixXd linear_forward(const DenseLayer& layer, const Eigen::MatrixXd& input);

struct LinearGrads {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    Eigen::MatrixXd input;
};

// `input` is the activation recorded by the matching forward pass.
LinearGrads linear_backward(const DenseLayer& layer, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd& upstream);

struct LossGrad {
    double value = 0.0;
    Eigen::MatrixXd grad; // wrt logits
};

// Mean over rows of -w[c*] * log softmax(logits)[c*] with c* the one-hot
// target; gradient is w[c*] * (softmax - onehot) / rows.
LossGrad weighted_softmax_ce(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target_onehot,
                             const Eigen::VectorXd& weights);

struct GaussianKl {
    double value = 0.0;
    Eigen::MatrixXd grad_mean;
    Eigen::MatrixXd grad_logvar;
};

// KL(N(mu, exp(logvar)) || N(0, 1)), mean over rows:
// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar).
GaussianKl gaussian_kl(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& logvar);

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Eigen::MatrixXd first_moment;
    Eigen::MatrixXd second_moment;
    long step = 0;

    static AdamState like(const Eigen::MatrixXd& param);
};

// One bias-corrected Adam update in place. Throws NumericError naming
// `block_name` when the gradient is not finite.
void adam_step(std::string_view block_name, Eigen::Ref<Eigen::MatrixXd> param,
               const Eigen::Ref<const Eigen::MatrixXd>& grad, AdamState& state,
               const AdamParams& hp);

} // namespace psvae
