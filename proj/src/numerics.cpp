#include "psvae/numerics.hpp"

#include <string>

namespace psvae {

Eigen::MatrixXd mish_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& upstream) {
    if (x.rows() != upstream.rows() || x.cols() != upstream.cols())
        throw DimensionError("mish_backward: shape mismatch");
    return (upstream.array() * mish_derivative(x.array())).matrix();
}

void mish_fused(const Eigen::MatrixXd& x, Eigen::MatrixXd& value, Eigen::MatrixXd& derivative) {
    const Eigen::ArrayXXd v = (-x.array().abs()).exp();
    const Eigen::ArrayXXd sp = x.array().max(0.0) + v.log1p();
    const Eigen::ArrayXXd u = (-2.0 * sp).exp();
    const Eigen::ArrayXXd t = (1.0 - u) / (1.0 + u);
    const Eigen::ArrayXXd sigmoid = (x.array() >= 0.0).select(1.0 / (1.0 + v), v / (1.0 + v));
    value = (x.array() * t).matrix();
    derivative = (t + x.array() * (1.0 - t.square()) * sigmoid).matrix();
}

DenseLayer DenseLayer::glorot(std::size_t out, std::size_t in, Rng& rng) {
    DenseLayer layer;
    layer.weights.resize(out, in);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    // column-major fill order pins the draw sequence
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
            layer.weights(i, j) = rng.uniform(-bound, bound);
    layer.bias = Eigen::VectorXd::Zero(out);
    return layer;
}

Eigen::MatrixXd linear_forward(const DenseLayer& layer, const Eigen::MatrixXd& input) {
    if (static_cast<std::size_t>(input.cols()) != layer.in_dim())
        throw DimensionError("linear_forward: input width " + std::to_string(input.cols()) +
                             " does not match layer input dimension " +
                             std::to_string(layer.in_dim()));
    Eigen::MatrixXd out = input * layer.weights.transpose();
    out.rowwise() += layer.bias.transpose();
    return out;
}

LinearGrads linear_backward(const DenseLayer& layer, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd& upstream) {
    if (static_cast<std::size_t>(input.cols()) != layer.in_dim() ||
        static_cast<std::size_t>(upstream.cols()) != layer.out_dim() ||
        input.rows() != upstream.rows())
        throw DimensionError("linear_backward: shape mismatch");
    LinearGrads g;
    g.weights.noalias() = upstream.transpose() * input;
    g.bias = upstream.colwise().sum();
    g.input.noalias() = upstream * layer.weights;
    return g;
}

LossGrad weighted_softmax_ce(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target_onehot,
                             const Eigen::VectorXd& weights) {
    const Eigen::Index rows = logits.rows();
    const Eigen::Index k = logits.cols();
    if (target_onehot.rows() != rows || target_onehot.cols() != k)
        throw DimensionError("weighted_softmax_ce: target shape mismatch");
    if (weights.size() != k)
        throw DimensionError("weighted_softmax_ce: weight count mismatch");
    if ((weights.array() <= 0.0).any())
        throw DimensionError("weighted_softmax_ce: weights must be positive");

    LossGrad out;
    out.grad.resize(rows, k);
    const double inv_rows = 1.0 / static_cast<double>(rows);

    for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::Index target = -1;
        for (Eigen::Index c = 0; c < k; ++c) {
            const double t = target_onehot(r, c);
            if (t == 1.0) {
                if (target >= 0)
                    throw DimensionError("weighted_softmax_ce: target row is not one-hot");
                target = c;
            } else if (t != 0.0) {
                throw DimensionError("weighted_softmax_ce: target row is not one-hot");
            }
        }
        if (target < 0)
            throw DimensionError("weighted_softmax_ce: target row is not one-hot");

        const double mx = logits.row(r).maxCoeff();
        Eigen::ArrayXd ex = (logits.row(r).array() - mx).exp();
        const double z = ex.sum();
        const double w = weights[target];
        out.value += -w * (logits(r, target) - mx - std::log(z));
        out.grad.row(r) = (w * inv_rows) * (ex / z).matrix().transpose();
        out.grad(r, target) -= w * inv_rows;
    }
    out.value *= inv_rows;
    return out;
}

GaussianKl gaussian_kl(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& logvar) {
    if (mean.rows() != logvar.rows() || mean.cols() != logvar.cols())
        throw DimensionError("gaussian_kl: shape mismatch");
    const double inv_rows = 1.0 / static_cast<double>(mean.rows());
    GaussianKl out;
    Eigen::ArrayXXd var = logvar.array().exp();
    out.value = 0.5 * inv_rows * (mean.array().square() + var - 1.0 - logvar.array()).sum();
    out.grad_mean = inv_rows * mean;
    out.grad_logvar = (0.5 * inv_rows) * (var - 1.0);
    return out;
}

AdamState AdamState::like(const Eigen::MatrixXd& param) {
    AdamState s;
    s.first_moment = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    s.second_moment = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    return s;
}

void adam_step(std::string_view block_name, Eigen::Ref<Eigen::MatrixXd> param,
               const Eigen::Ref<const Eigen::MatrixXd>& grad, AdamState& state,
               const AdamParams& hp) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
        throw DimensionError("adam_step: gradient shape mismatch in block '" +
                             std::string(block_name) + "'");
    if (!grad.allFinite())
        throw NumericError("optimizer error: non-finite gradient in block '" +
                           std::string(block_name) + "'");

    ++state.step;
    state.first_moment = hp.beta1 * state.first_moment + (1.0 - hp.beta1) * grad;
    state.second_moment.array() =
        hp.beta2 * state.second_moment.array() + (1.0 - hp.beta2) * grad.array().square();

    const double bias1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    param.array() -= hp.learning_rate * (state.first_moment.array() / bias1) /
                     ((state.second_moment.array() / bias2).sqrt() + hp.epsilon);
}

} // namespace psvae
