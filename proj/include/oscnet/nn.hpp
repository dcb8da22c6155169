#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/matrix.hpp"
#include "oscnet/rng.hpp"

namespace oscnet {

enum class Activation { kRelu, kIdentity };

inline std::string_view activation_name(Activation a) {
    return a == Activation::kRelu ? "relu" : "identity";
}

inline Activation activation_from_name(std::string_view name) {
    if (name == "relu") return Activation::kRelu;
    if (name == "identity") return Activation::kIdentity;
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

// One affine map plus activation. weights is out x in, row-major.
struct DenseLayer {
    Matrix weights;
    std::vector<double> biases;
    Activation activation = Activation::kIdentity;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    bool operator==(const DenseLayer&) const = default;
};

// Feedforward stack of dense layers. The constructor checks that adjacent
// layer dimensions chain and that bias lengths match, so an Mlp value is
// structurally valid by construction.
class Mlp {
public:
    Mlp() = default;

    explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw ValidationError("Mlp: needs at least one layer");
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (layers_[i].biases.size() != layers_[i].out_dim()) {
                throw ValidationError("Mlp: layer " + std::to_string(i) + " bias length " +
                                      std::to_string(layers_[i].biases.size()) + " != out dim " +
                                      std::to_string(layers_[i].out_dim()));
            }
            if (i > 0 && layers_[i].in_dim() != layers_[i - 1].out_dim()) {
                throw ValidationError("Mlp: layer " + std::to_string(i) + " input dim " +
                                      std::to_string(layers_[i].in_dim()) + " != previous output dim " +
                                      std::to_string(layers_[i - 1].out_dim()));
            }
        }
    }

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
    std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d;
        d.reserve(layers_.size() + 1);
        d.push_back(input_dim());
        for (const auto& layer : layers_) d.push_back(layer.out_dim());
        return d;
    }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& layer : layers_) n += layer.weights.size() + layer.biases.size();
        return n;
    }

    bool operator==(const Mlp&) const = default;

private:
    std::vector<DenseLayer> layers_;
};

// Glorot-uniform weights in [-L, L] with L = sqrt(6/(fan_in+fan_out)),
// zero biases. Weights are drawn row-major, layer by layer, from a single
// generator, so the result is a pure function of (dims, activations, seed).
inline Mlp init_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations,
                    std::uint64_t seed) {
    if (dims.size() < 2) throw ValidationError("init_mlp: need at least input and output dims");
    if (activations.size() != dims.size() - 1) {
        throw ValidationError("init_mlp: expected " + std::to_string(dims.size() - 1) + " activations, got " +
                              std::to_string(activations.size()));
    }
    for (std::size_t d : dims) {
        if (d == 0) throw ValidationError("init_mlp: layer dims must be positive");
    }

    Rng rng(seed);
    std::vector<DenseLayer> layers;
    layers.reserve(activations.size());
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l];
        const std::size_t fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix weights(fan_out, fan_in);
        for (std::size_t i = 0; i < weights.size(); ++i) weights.data()[i] = rng.uniform(-limit, limit);
        layers.push_back(DenseLayer{std::move(weights), std::vector<double>(fan_out, 0.0), activations[l]});
    }
    return Mlp(std::move(layers));
}

// Per-layer inputs and pre-activations recorded by forward() for backward().
struct ForwardCache {
    std::vector<Matrix> layer_inputs;
    std::vector<Matrix> pre_activations;
};

namespace detail {

// z = x * w^T + b, for x batch x in, w out x in.
inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix z(x.rows(), w.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        double* zi = z.row(i);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            const double* wj = w.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < w.cols(); ++k) acc += xi[k] * wj[k];
            zi[j] = acc + b[j];
        }
    }
    return z;
}

inline Matrix apply_activation(Matrix z, Activation a) {
    if (a == Activation::kRelu) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (z.data()[i] < 0.0) z.data()[i] = 0.0;
        }
    }
    return z;
}

// delta ∘ act'(z). The ReLU derivative at exactly 0 is defined as 0.
inline Matrix activation_backward(Matrix delta, const Matrix& z, Activation a) {
    if (a == Activation::kRelu) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
            if (!(z.data()[i] > 0.0)) delta.data()[i] = 0.0;
        }
    }
    return delta;
}

// dW = delta^T * x, for delta batch x out and x batch x in.
inline Matrix grad_weights(const Matrix& delta, const Matrix& x) {
    Matrix dw(delta.cols(), x.cols());
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        const double* xi = x.row(i);
        const double* di = delta.row(i);
        for (std::size_t j = 0; j < delta.cols(); ++j) {
            const double scale = di[j];
            double* dwj = dw.row(j);
            for (std::size_t k = 0; k < x.cols(); ++k) dwj[k] += scale * xi[k];
        }
    }
    return dw;
}

inline std::vector<double> grad_biases(const Matrix& delta) {
    std::vector<double> db(delta.cols(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        const double* di = delta.row(i);
        for (std::size_t j = 0; j < delta.cols(); ++j) db[j] += di[j];
    }
    return db;
}

// dX = delta * w, for delta batch x out and w out x in.
inline Matrix grad_inputs(const Matrix& delta, const Matrix& w) {
    Matrix dx(delta.rows(), w.cols());
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        const double* di = delta.row(i);
        double* dxi = dx.row(i);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            const double scale = di[j];
            const double* wj = w.row(j);
            for (std::size_t k = 0; k < w.cols(); ++k) dxi[k] += scale * wj[k];
        }
    }
    return dx;
}

}  // namespace detail

// Forward pass over a batch (rows are samples). Pass a cache to retain what
// backward() needs; leave it null for plain inference.
inline Matrix forward(const Mlp& mlp, const Matrix& inputs, ForwardCache* cache = nullptr) {
    if (mlp.layers().empty()) throw ValidationError("forward: uninitialized network");
    if (inputs.cols() != mlp.input_dim()) {
        throw ValidationError("forward: input has " + std::to_string(inputs.cols()) + " columns, network expects " +
                              std::to_string(mlp.input_dim()));
    }
    if (cache) {
        cache->layer_inputs.clear();
        cache->pre_activations.clear();
    }
    Matrix x = inputs;
    for (const auto& layer : mlp.layers()) {
        if (cache) cache->layer_inputs.push_back(x);
        Matrix z = detail::affine(x, layer.weights, layer.biases);
        if (cache) cache->pre_activations.push_back(z);
        x = detail::apply_activation(std::move(z), layer.activation);
    }
    x.require_finite("forward: output");
    return x;
}

// Mean squared error over every entry (batch x output dims), plus its
// gradient 2 (pred - target) / count.
inline std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ValidationError("mse_loss: prediction and target shapes differ");
    }
    const double inv_count = 1.0 / static_cast<double>(pred.size());
    Matrix grad(pred.rows(), pred.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.data()[i] - target.data()[i];
        loss += diff * diff;
        grad.data()[i] = 2.0 * diff * inv_count;
    }
    loss *= inv_count;
    if (!std::isfinite(loss)) throw ValidationError("mse_loss: non-finite loss");
    return {loss, std::move(grad)};
}

// One weight matrix plus bias vector, shaped like a layer's parameters.
// Used both for gradients and for the Adam moment accumulators.
struct ParamShaped {
    Matrix weights;
    std::vector<double> biases;

    bool operator==(const ParamShaped&) const = default;
};

struct Gradients {
    std::vector<ParamShaped> layers;

    bool operator==(const Gradients&) const = default;
};

// Reverse-mode pass. `cache` must come from a forward() call on the same
// network and batch; shapes are checked and mismatches rejected.
inline Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& loss_grad) {
    const auto& layers = mlp.layers();
    if (layers.empty()) throw ValidationError("backward: uninitialized network");
    if (cache.layer_inputs.size() != layers.size() || cache.pre_activations.size() != layers.size()) {
        throw ValidationError("backward: cache does not match network depth");
    }
    const std::size_t batch = cache.layer_inputs.front().rows();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (cache.layer_inputs[l].rows() != batch || cache.layer_inputs[l].cols() != layers[l].in_dim() ||
            cache.pre_activations[l].rows() != batch || cache.pre_activations[l].cols() != layers[l].out_dim()) {
            throw ValidationError("backward: cache shape mismatch at layer " + std::to_string(l));
        }
    }
    if (loss_grad.rows() != batch || loss_grad.cols() != mlp.output_dim()) {
        throw ValidationError("backward: loss gradient shape does not match network output");
    }

    Gradients grads;
    grads.layers.resize(layers.size());
    Matrix delta = detail::activation_backward(loss_grad, cache.pre_activations.back(), layers.back().activation);
    for (std::size_t l = layers.size(); l-- > 0;) {
        grads.layers[l].weights = detail::grad_weights(delta, cache.layer_inputs[l]);
        grads.layers[l].biases = detail::grad_biases(delta);
        if (l > 0) {
            delta = detail::activation_backward(detail::grad_inputs(delta, layers[l].weights),
                                                cache.pre_activations[l - 1], layers[l - 1].activation);
        }
    }
    return grads;
}

// Adam optimizer state: step count, hyperparameters, and first/second moment
// accumulators shaped like the network parameters.
struct AdamState {
    std::uint64_t step = 0;
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    std::vector<ParamShaped> m;
    std::vector<ParamShaped> v;

    static AdamState for_mlp(const Mlp& mlp, double alpha = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                             double epsilon = 1e-7) {
        AdamState state;
        state.alpha = alpha;
        state.beta1 = beta1;
        state.beta2 = beta2;
        state.epsilon = epsilon;
        for (const auto& layer : mlp.layers()) {
            ParamShaped zero{Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)};
            state.m.push_back(zero);
            state.v.push_back(std::move(zero));
        }
        return state;
    }
};

namespace detail {

inline void adam_update_span(double* param, const double* grad, double* m, double* v, std::size_t n,
                             const AdamState& s, double bias1, double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        param[i] -= s.alpha * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

}  // namespace detail

// Standard Adam with bias correction; increments state.step by exactly one.
inline void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state) {
    auto& layers = mlp.layers();
    if (grads.layers.size() != layers.size() || state.m.size() != layers.size() || state.v.size() != layers.size()) {
        throw ValidationError("adam_step: gradient/state layer count does not match network");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto matches = [&](const ParamShaped& p) {
            return p.weights.rows() == layers[l].out_dim() && p.weights.cols() == layers[l].in_dim() &&
                   p.biases.size() == layers[l].out_dim();
        };
        if (!matches(grads.layers[l]) || !matches(state.m[l]) || !matches(state.v[l])) {
            throw ValidationError("adam_step: gradient/state shape mismatch at layer " + std::to_string(l));
        }
    }

    state.step += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        detail::adam_update_span(layers[l].weights.data(), grads.layers[l].weights.data(),
                                 state.m[l].weights.data(), state.v[l].weights.data(), layers[l].weights.size(),
                                 state, bias1, bias2);
        detail::adam_update_span(layers[l].biases.data(), grads.layers[l].biases.data(), state.m[l].biases.data(),
                                 state.v[l].biases.data(), layers[l].biases.size(), state, bias1, bias2);
    }
}

}  // namespace oscnet
