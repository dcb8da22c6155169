#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "oscnet/checkpoint.hpp"
#include "oscnet/matrix.hpp"
#include "oscnet/nn.hpp"
#include "oscnet/rng.hpp"
#include "oscnet/text.hpp"

namespace {

namespace fs = std::filesystem;
using oscnet::Activation;
using oscnet::AdamState;
using oscnet::Checkpoint;
using oscnet::CheckpointMetadata;
using oscnet::DenseLayer;
using oscnet::ForwardCache;
using oscnet::Gradients;
using oscnet::Matrix;
using oscnet::Mlp;
using oscnet::TimeGrid;
using oscnet::ValidationError;

Matrix identity_matrix(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

TEST(NnTest, InitPaperArchitectureParameterCount) {
    const Mlp mlp = oscnet::init_mlp({3, 64, 128, 100},
                                     {Activation::kRelu, Activation::kRelu, Activation::kIdentity}, 1);
    // 3*64+64 + 64*128+128 + 128*100+100
    const std::size_t expected = 3 * 64 + 64 + 64 * 128 + 128 + 128 * 100 + 100;
    EXPECT_EQ(expected, 21476u);
    EXPECT_EQ(mlp.parameter_count(), expected);
    EXPECT_EQ(mlp.dims(), (std::vector<std::size_t>{3, 64, 128, 100}));
}

TEST(NnTest, InitBiasesAreZeroAndWeightsWithinGlorotBound) {
    const Mlp mlp = oscnet::init_mlp({3, 64}, {Activation::kRelu}, 7);
    const double limit = std::sqrt(6.0 / 67.0);
    for (const auto& layer : mlp.layers()) {
        for (double b : layer.biases) EXPECT_EQ(b, 0.0);
        for (double w : layer.weights.values()) {
            EXPECT_GE(w, -limit);
            EXPECT_LE(w, limit);
        }
    }
}

TEST(NnTest, InitIsDeterministicPerSeed) {
    const std::vector<std::size_t> dims{3, 8, 5};
    const std::vector<Activation> acts{Activation::kRelu, Activation::kIdentity};
    EXPECT_EQ(oscnet::init_mlp(dims, acts, 3), oscnet::init_mlp(dims, acts, 3));
    EXPECT_NE(oscnet::init_mlp(dims, acts, 3), oscnet::init_mlp(dims, acts, 4));
}

TEST(NnTest, InitRejectsMismatchedArguments) {
    EXPECT_THROW(oscnet::init_mlp({3, 4}, {Activation::kRelu, Activation::kRelu}, 1), ValidationError);
    EXPECT_THROW(oscnet::init_mlp({3}, {}, 1), ValidationError);
    EXPECT_THROW(oscnet::init_mlp({3, 0}, {Activation::kRelu}, 1), ValidationError);
}

TEST(NnTest, MlpRejectsBrokenDimensionChain) {
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{Matrix(4, 3), std::vector<double>(4, 0.0), Activation::kRelu});
    layers.push_back(DenseLayer{Matrix(2, 5), std::vector<double>(2, 0.0), Activation::kIdentity});
    EXPECT_THROW(Mlp(std::move(layers)), ValidationError);

    std::vector<DenseLayer> bad_bias;
    bad_bias.push_back(DenseLayer{Matrix(4, 3), std::vector<double>(3, 0.0), Activation::kRelu});
    EXPECT_THROW(Mlp(std::move(bad_bias)), ValidationError);
}

TEST(NnTest, ForwardZeroNetworkGivesZeroOutputs) {
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{Matrix(4, 3), std::vector<double>(4, 0.0), Activation::kRelu});
    layers.push_back(DenseLayer{Matrix(2, 4), std::vector<double>(2, 0.0), Activation::kIdentity});
    const Mlp mlp(std::move(layers));
    const Matrix out = oscnet::forward(mlp, Matrix(5, 3, std::vector<double>(15, 1.25)));
    for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(NnTest, ForwardIdentityLayerIsIdentityMap) {
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{identity_matrix(3), std::vector<double>(3, 0.0), Activation::kIdentity});
    const Mlp mlp(std::move(layers));
    const Matrix inputs(2, 3, {0.5, -1.5, 2.0, 3.0, 0.25, -0.125});
    EXPECT_EQ(oscnet::forward(mlp, inputs), inputs);
}

TEST(NnTest, ForwardMatchesHandBuiltReluExample) {
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{Matrix(1, 2, {1.0, -1.0}), {-0.5}, Activation::kRelu});
    const Mlp mlp(std::move(layers));
    // relu(2 - 1 - 0.5) = 0.5
    EXPECT_DOUBLE_EQ(oscnet::forward(mlp, Matrix(1, 2, {2.0, 1.0}))(0, 0), 0.5);
    // relu of a negative pre-activation clamps to zero
    EXPECT_DOUBLE_EQ(oscnet::forward(mlp, Matrix(1, 2, {0.0, 1.0}))(0, 0), 0.0);
}

TEST(NnTest, ForwardRejectsShapeMismatch) {
    const Mlp mlp = oscnet::init_mlp({3, 4}, {Activation::kRelu}, 1);
    EXPECT_THROW(oscnet::forward(mlp, Matrix(2, 5)), ValidationError);
}

TEST(NnTest, ForwardIsDeterministic) {
    const Mlp mlp = oscnet::init_mlp({3, 8, 5}, {Activation::kRelu, Activation::kIdentity}, 11);
    oscnet::Rng rng(12);
    std::vector<double> values(12);
    for (auto& v : values) v = rng.uniform(-2.0, 2.0);
    const Matrix inputs(4, 3, values);
    EXPECT_EQ(oscnet::forward(mlp, inputs), oscnet::forward(mlp, inputs));
}

TEST(NnTest, MseLossBasics) {
    const Matrix p(1, 2, {1.0, 1.0});
    const Matrix t(1, 2, {0.0, 0.0});
    const auto [loss, grad] = oscnet::mse_loss(p, t);
    EXPECT_DOUBLE_EQ(loss, 1.0);
    EXPECT_DOUBLE_EQ(grad(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(grad(0, 1), 1.0);

    const auto [zero_loss, zero_grad] = oscnet::mse_loss(p, p);
    EXPECT_EQ(zero_loss, 0.0);
    for (double g : zero_grad.values()) EXPECT_EQ(g, 0.0);

    EXPECT_THROW(oscnet::mse_loss(p, Matrix(2, 2)), ValidationError);
}

TEST(NnTest, MseLossScalesQuadratically) {
    const Matrix target(2, 3);
    oscnet::Rng rng(3);
    std::vector<double> diff(6);
    for (auto& v : diff) v = rng.uniform(-1.0, 1.0);
    std::vector<double> scaled(6);
    for (std::size_t i = 0; i < 6; ++i) scaled[i] = 2.0 * diff[i];
    const double base = oscnet::mse_loss(Matrix(2, 3, diff), target).first;
    const double big = oscnet::mse_loss(Matrix(2, 3, scaled), target).first;
    EXPECT_DOUBLE_EQ(big, 4.0 * base);
}

// --- finite-difference oracle ------------------------------------------------

double loss_at(const Mlp& mlp, const Matrix& inputs, const Matrix& targets) {
    return oscnet::mse_loss(oscnet::forward(mlp, inputs), targets).first;
}

// Central difference d loss / d theta for one scalar parameter.
double numeric_grad(Mlp mlp, std::size_t layer, bool is_bias, std::size_t index, const Matrix& inputs,
                    const Matrix& targets, double h) {
    double* param = is_bias ? &mlp.layers()[layer].biases[index] : &mlp.layers()[layer].weights.data()[index];
    const double original = *param;
    *param = original + h;
    const double plus = loss_at(mlp, inputs, targets);
    *param = original - h;
    const double minus = loss_at(mlp, inputs, targets);
    return (plus - minus) / (2.0 * h);
}

struct GradCheckCase {
    Mlp mlp;
    Matrix inputs;
    Matrix targets;
};

// Random net and batch, re-rolled until no relu pre-activation sits within
// 1e-3 of its kink, where the central difference would straddle the
// non-smooth point.
GradCheckCase make_gradcheck_case(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t s = oscnet::derive_seed(seed, attempt);
        std::vector<Activation> acts(dims.size() - 1, Activation::kRelu);
        acts.back() = Activation::kIdentity;
        Mlp mlp = oscnet::init_mlp(dims, acts, s);

        oscnet::Rng rng(s + 1);
        const std::size_t batch = 1 + rng.below(4);
        std::vector<double> in(batch * dims.front());
        for (auto& v : in) v = rng.uniform(-2.0, 2.0);
        std::vector<double> out(batch * dims.back());
        for (auto& v : out) v = rng.uniform(-2.0, 2.0);
        Matrix inputs(batch, dims.front(), std::move(in));
        Matrix targets(batch, dims.back(), std::move(out));

        ForwardCache cache;
        oscnet::forward(mlp, inputs, &cache);
        bool near_kink = false;
        for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
            if (mlp.layers()[l].activation != Activation::kRelu) continue;
            for (double z : cache.pre_activations[l].values()) {
                if (std::abs(z) < 1e-3) near_kink = true;
            }
        }
        if (!near_kink) return GradCheckCase{std::move(mlp), std::move(inputs), std::move(targets)};
    }
}

double max_relative_error_vs_finite_difference(const GradCheckCase& c, double h) {
    ForwardCache cache;
    const Matrix pred = oscnet::forward(c.mlp, c.inputs, &cache);
    const auto [loss, loss_grad] = oscnet::mse_loss(pred, c.targets);
    (void)loss;
    const Gradients grads = oscnet::backward(c.mlp, cache, loss_grad);

    double worst = 0.0;
    for (std::size_t l = 0; l < c.mlp.layers().size(); ++l) {
        for (std::size_t i = 0; i < grads.layers[l].weights.size(); ++i) {
            const double analytic = grads.layers[l].weights.data()[i];
            const double numeric = numeric_grad(c.mlp, l, false, i, c.inputs, c.targets, h);
            worst = std::max(worst, std::abs(analytic - numeric) /
                                        std::max(std::abs(analytic) + std::abs(numeric), 1e-8));
        }
        for (std::size_t i = 0; i < grads.layers[l].biases.size(); ++i) {
            const double analytic = grads.layers[l].biases[i];
            const double numeric = numeric_grad(c.mlp, l, true, i, c.inputs, c.targets, h);
            worst = std::max(worst, std::abs(analytic - numeric) /
                                        std::max(std::abs(analytic) + std::abs(numeric), 1e-8));
        }
    }
    return worst;
}

TEST(NnTest, BackwardMatchesFiniteDifferences) {
    const std::vector<std::vector<std::size_t>> shapes = {{3, 8, 8, 5}, {3, 5, 2}, {2, 4, 4, 3}, {1, 6, 1}};
    std::uint64_t seed = 100;
    for (const auto& dims : shapes) {
        const GradCheckCase c = make_gradcheck_case(dims, seed++);
        EXPECT_LE(max_relative_error_vs_finite_difference(c, 1e-5), 1e-4);
    }
}

TEST(NnTest, BackwardZeroLossGradGivesZeroGradients) {
    const GradCheckCase c = make_gradcheck_case({3, 6, 4}, 55);
    ForwardCache cache;
    oscnet::forward(c.mlp, c.inputs, &cache);
    const Gradients grads = oscnet::backward(c.mlp, cache, Matrix(c.inputs.rows(), 4));
    for (const auto& layer : grads.layers) {
        for (double g : layer.weights.values()) EXPECT_EQ(g, 0.0);
        for (double g : layer.biases) EXPECT_EQ(g, 0.0);
    }
}

TEST(NnTest, BackwardDeadReluUnitHasZeroIncomingGradients) {
    // Unit 1 of the hidden layer has a hugely negative bias: dead for any
    // input in the batch, so everything feeding it gets zero gradient.
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{Matrix(2, 2, {0.3, -0.2, 0.1, 0.4}), {0.1, -100.0}, Activation::kRelu});
    layers.push_back(DenseLayer{Matrix(1, 2, {0.7, -0.6}), {0.05}, Activation::kIdentity});
    const Mlp mlp{std::move(layers)};

    const Matrix inputs(3, 2, {1.0, 0.5, -0.5, 2.0, 0.25, -1.0});
    const Matrix targets(3, 1, {0.1, 0.2, 0.3});
    ForwardCache cache;
    const Matrix pred = oscnet::forward(mlp, inputs, &cache);
    const auto [loss, loss_grad] = oscnet::mse_loss(pred, targets);
    (void)loss;
    const Gradients grads = oscnet::backward(mlp, cache, loss_grad);

    EXPECT_EQ(grads.layers[0].weights(1, 0), 0.0);
    EXPECT_EQ(grads.layers[0].weights(1, 1), 0.0);
    EXPECT_EQ(grads.layers[0].biases[1], 0.0);
    EXPECT_NE(grads.layers[0].weights(0, 0), 0.0);
}

TEST(NnTest, BackwardRejectsMismatchedCache) {
    const Mlp mlp = oscnet::init_mlp({3, 4, 2}, {Activation::kRelu, Activation::kIdentity}, 9);
    ForwardCache cache;
    oscnet::forward(mlp, Matrix(2, 3), &cache);
    EXPECT_THROW(oscnet::backward(mlp, cache, Matrix(3, 2)), ValidationError);  // batch mismatch
    EXPECT_THROW(oscnet::backward(mlp, ForwardCache{}, Matrix(2, 2)), ValidationError);

    const Mlp other = oscnet::init_mlp({3, 5, 2}, {Activation::kRelu, Activation::kIdentity}, 9);
    EXPECT_THROW(oscnet::backward(other, cache, Matrix(2, 2)), ValidationError);  // foreign cache
}

// --- Adam --------------------------------------------------------------------

Mlp scalar_net(double theta) {
    std::vector<DenseLayer> layers;
    layers.push_back(DenseLayer{Matrix(1, 1, {theta}), {0.0}, Activation::kIdentity});
    return Mlp(std::move(layers));
}

Gradients scalar_grads(double g_weight) {
    Gradients grads;
    grads.layers.push_back(oscnet::ParamShaped{Matrix(1, 1, {g_weight}), {0.0}});
    return grads;
}

TEST(NnTest, AdamZeroGradientLeavesParametersUnchanged) {
    Mlp mlp = oscnet::init_mlp({3, 8, 5}, {Activation::kRelu, Activation::kIdentity}, 31);
    const Mlp before = mlp;
    AdamState state = AdamState::for_mlp(mlp);
    Gradients zero;
    for (const auto& layer : mlp.layers()) {
        zero.layers.push_back(
            oscnet::ParamShaped{Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)});
    }
    oscnet::adam_step(mlp, zero, state);
    EXPECT_EQ(mlp, before);
    EXPECT_EQ(state.step, 1u);
}

TEST(NnTest, AdamFirstStepIsSignedUnitStep) {
    // After bias correction the first update is exactly alpha * g / (|g| + eps).
    for (double g : {0.37, -2.0, 12.5}) {
        Mlp mlp = scalar_net(1.0);
        AdamState state = AdamState::for_mlp(mlp);
        oscnet::adam_step(mlp, scalar_grads(g), state);
        const double expected = 1.0 - state.alpha * g / (std::abs(g) + state.epsilon);
        EXPECT_NEAR(mlp.layers()[0].weights(0, 0), expected, 1e-12);
    }
}

TEST(NnTest, AdamDrivesQuadraticToZero) {
    // f(theta) = theta^2 from theta = 1, alpha = 0.001: |theta| < 0.01 within
    // 5000 steps.
    Mlp mlp = scalar_net(1.0);
    AdamState state = AdamState::for_mlp(mlp, 0.001);
    for (int step = 0; step < 5000; ++step) {
        const double theta = mlp.layers()[0].weights(0, 0);
        oscnet::adam_step(mlp, scalar_grads(2.0 * theta), state);
    }
    EXPECT_LT(std::abs(mlp.layers()[0].weights(0, 0)), 0.01);
    EXPECT_EQ(state.step, 5000u);
}

TEST(NnTest, AdamSecondMomentIgnoresGradientSign) {
    Mlp a = oscnet::init_mlp({2, 3, 2}, {Activation::kRelu, Activation::kIdentity}, 8);
    Mlp b = a;
    AdamState sa = AdamState::for_mlp(a);
    AdamState sb = AdamState::for_mlp(b);

    Gradients g_pos, g_neg;
    oscnet::Rng rng(64);
    for (const auto& layer : a.layers()) {
        std::vector<double> w(layer.weights.size());
        for (auto& v : w) v = rng.uniform(-1.0, 1.0);
        std::vector<double> neg_w(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) neg_w[i] = -w[i];
        std::vector<double> bias(layer.out_dim(), 0.25);
        std::vector<double> neg_bias(layer.out_dim(), -0.25);
        g_pos.layers.push_back(oscnet::ParamShaped{Matrix(layer.out_dim(), layer.in_dim(), w), bias});
        g_neg.layers.push_back(oscnet::ParamShaped{Matrix(layer.out_dim(), layer.in_dim(), neg_w), neg_bias});
    }
    oscnet::adam_step(a, g_pos, sa);
    oscnet::adam_step(b, g_neg, sb);
    EXPECT_EQ(sa.v, sb.v);
    EXPECT_NE(sa.m, sb.m);
}

// --- checkpoints ---------------------------------------------------------------

class TempDir {
public:
    TempDir() {
        dir_ = fs::temp_directory_path() /
               ("oscnet_nn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    fs::path operator/(const std::string& name) const { return dir_ / name; }

private:
    static inline int counter_ = 0;
    fs::path dir_;
};

Checkpoint probe_checkpoint(std::uint64_t seed) {
    Mlp mlp = oscnet::init_mlp({3, 8, 10}, {Activation::kRelu, Activation::kIdentity}, seed);
    CheckpointMetadata metadata;
    metadata.seed = seed;
    metadata.epochs = 3;
    metadata.batch_size = 2;
    metadata.hbar_values = {1.0, 0.5};
    metadata.dataset_manifest_hash = "0123456789abcdef";
    return Checkpoint{std::move(mlp), TimeGrid::linspace(0.0, 10.0, 10), std::move(metadata)};
}

TEST(NnTest, CheckpointRoundTripIsBitwiseExact) {
    const TempDir dir;
    const Checkpoint original = probe_checkpoint(17);
    const fs::path path = dir / "ck.json";
    oscnet::save_checkpoint(original, path);
    const Checkpoint loaded = oscnet::load_checkpoint(path);

    EXPECT_EQ(loaded.mlp, original.mlp);
    EXPECT_EQ(loaded.grid, original.grid);
    EXPECT_EQ(loaded.metadata, original.metadata);

    oscnet::Rng rng(4);
    std::vector<double> values(5 * 3);
    for (auto& v : values) v = rng.uniform(-2.0, 2.0);
    const Matrix probe(5, 3, values);
    EXPECT_EQ(oscnet::forward(loaded.mlp, probe), oscnet::forward(original.mlp, probe));
}

TEST(NnTest, CheckpointRejectsTamperedDims) {
    const TempDir dir;
    const fs::path path = dir / "ck.json";
    oscnet::save_checkpoint(probe_checkpoint(18), path);
    auto j = nlohmann::json::parse(oscnet::text::read_file(path));
    j["dims"][1] = 9;
    oscnet::text::write_file(path, j.dump());
    EXPECT_THROW(oscnet::load_checkpoint(path), ValidationError);
}

TEST(NnTest, CheckpointRejectsMissingTimeGrid) {
    const TempDir dir;
    const fs::path path = dir / "ck.json";
    oscnet::save_checkpoint(probe_checkpoint(19), path);
    auto j = nlohmann::json::parse(oscnet::text::read_file(path));
    j.erase("time_grid");
    oscnet::text::write_file(path, j.dump());
    try {
        oscnet::load_checkpoint(path);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("time_grid"), std::string::npos);
    }
}

TEST(NnTest, CheckpointRejectsWrongFormatVersion) {
    const TempDir dir;
    const fs::path path = dir / "ck.json";
    oscnet::save_checkpoint(probe_checkpoint(20), path);
    auto j = nlohmann::json::parse(oscnet::text::read_file(path));
    j["format_version"] = 2;
    oscnet::text::write_file(path, j.dump());
    try {
        oscnet::load_checkpoint(path);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("format_version"), std::string::npos);
    }
}

TEST(NnTest, CheckpointRejectsCorruptJson) {
    const TempDir dir;
    const fs::path path = dir / "ck.json";
    oscnet::text::write_file(path, "{ not json");
    EXPECT_THROW(oscnet::load_checkpoint(path), oscnet::ParseError);
}

}  // namespace
