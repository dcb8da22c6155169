#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oscnet/checkpoint.hpp"
#include "oscnet/dataset.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/nn.hpp"
#include "oscnet/rng.hpp"
#include "oscnet/text.hpp"

namespace oscnet {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    std::vector<std::size_t> hidden_dims = {64, 128};

    void validate() const {
        if (batch_size == 0) throw ValidationError("TrainConfig: batch_size must be positive");
        if (!(std::isfinite(learning_rate) && learning_rate > 0.0)) {
            throw ValidationError("TrainConfig: learning_rate must be > 0");
        }
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
            throw ValidationError("TrainConfig: val_fraction must lie in [0, 1)");
        }
        if (hidden_dims.empty()) throw ValidationError("TrainConfig: hidden_dims must be non-empty");
        for (std::size_t d : hidden_dims) {
            if (d == 0) throw ValidationError("TrainConfig: hidden_dims must be positive");
        }
    }
};

// Per-epoch loss histories plus enough bookkeeping to audit the run. The
// gradient_sample_count counter exists so tests can prove validation samples
// never fed an update.
struct TrainReport {
    std::vector<double> train_losses;
    std::vector<double> val_losses;   // NaN entries when there is no validation split
    double wall_seconds = 0.0;
    std::uint64_t gradient_sample_count = 0;
    std::size_t train_sample_count = 0;
    std::size_t val_sample_count = 0;
    std::string checkpoint_ref;       // filled by callers that persist the snapshot
};

struct TrainResult {
    Mlp mlp;
    TrainReport report;
};

// Sub-seed streams under TrainConfig::seed.
inline constexpr std::uint64_t kStreamSplit = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamEpochBase = 16;

// Mean squared error of the network over a dataset, one read-only pass.
inline double evaluate_loss(const Mlp& mlp, const Dataset& dataset) {
    if (dataset.samples.empty()) throw ValidationError("evaluate_loss: dataset is empty");
    if (mlp.output_dim() != dataset.grid.size()) {
        throw ValidationError("evaluate_loss: network output dim " + std::to_string(mlp.output_dim()) +
                              " != dataset grid length " + std::to_string(dataset.grid.size()));
    }

    constexpr std::size_t kChunk = 256;
    const std::size_t t_steps = dataset.grid.size();
    double sse = 0.0;
    for (std::size_t begin = 0; begin < dataset.samples.size(); begin += kChunk) {
        const std::size_t count = std::min(kChunk, dataset.samples.size() - begin);
        Matrix inputs(count, 3);
        for (std::size_t i = 0; i < count; ++i) {
            const Sample& s = dataset.samples[begin + i];
            inputs(i, 0) = s.x0;
            inputs(i, 1) = s.p0;
            inputs(i, 2) = s.hbar;
        }
        const Matrix pred = forward(mlp, inputs);
        for (std::size_t i = 0; i < count; ++i) {
            const Sample& s = dataset.samples[begin + i];
            for (std::size_t t = 0; t < t_steps; ++t) {
                const double diff = pred(i, t) - s.label[t];
                sse += diff * diff;
            }
        }
    }
    return sse / (static_cast<double>(dataset.samples.size()) * static_cast<double>(t_steps));
}

// Mini-batch training: stratified validation split, per-epoch reshuffle from
// (seed, epoch), full batches plus the final partial batch, Adam updates.
// Deterministic end to end for a fixed seed.
inline TrainResult train(const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.samples.empty()) throw ValidationError("train: dataset is empty");

    const auto start = std::chrono::steady_clock::now();

    Dataset train_set{dataset.config, dataset.grid, {}};
    Dataset val_set{dataset.config, dataset.grid, {}};
    if (config.val_fraction > 0.0) {
        Rng split_rng(derive_seed(config.seed, kStreamSplit));
        std::tie(train_set, val_set) = split(dataset, config.val_fraction, split_rng);
    } else {
        train_set.samples = dataset.samples;
    }
    if (train_set.samples.empty()) throw ValidationError("train: no samples left after validation split");
    if (config.batch_size > train_set.samples.size()) {
        throw ValidationError("train: batch_size " + std::to_string(config.batch_size) +
                              " exceeds post-split training set size " +
                              std::to_string(train_set.samples.size()));
    }

    const std::size_t t_steps = dataset.grid.size();
    std::vector<std::size_t> dims;
    dims.push_back(3);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(t_steps);
    std::vector<Activation> activations(config.hidden_dims.size(), Activation::kRelu);
    activations.push_back(Activation::kIdentity);

    Mlp mlp = init_mlp(dims, activations, derive_seed(config.seed, kStreamInit));
    AdamState adam = AdamState::for_mlp(mlp, config.learning_rate);

    TrainReport report;
    report.train_sample_count = train_set.samples.size();
    report.val_sample_count = val_set.samples.size();

    const std::size_t n_train = train_set.samples.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, kStreamEpochBase + epoch));
        shuffle(order, shuffle_rng);

        double epoch_loss_weighted = 0.0;
        for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, n_train - begin);
            Matrix inputs(count, 3);
            Matrix targets(count, t_steps);
            for (std::size_t i = 0; i < count; ++i) {
                const Sample& s = train_set.samples[order[begin + i]];
                inputs(i, 0) = s.x0;
                inputs(i, 1) = s.p0;
                inputs(i, 2) = s.hbar;
                for (std::size_t t = 0; t < t_steps; ++t) targets(i, t) = s.label[t];
            }

            ForwardCache cache;
            const Matrix pred = forward(mlp, inputs, &cache);
            const auto [loss, loss_grad] = mse_loss(pred, targets);
            const Gradients grads = backward(mlp, cache, loss_grad);
            adam_step(mlp, grads, adam);

            epoch_loss_weighted += loss * static_cast<double>(count);
            report.gradient_sample_count += count;
        }
        report.train_losses.push_back(epoch_loss_weighted / static_cast<double>(n_train));
        report.val_losses.push_back(val_set.samples.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                            : evaluate_loss(mlp, val_set));
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return TrainResult{std::move(mlp), std::move(report)};
}

// Binds a trained network to its dataset and config so the checkpoint can be
// reproduced and audited later.
inline Checkpoint make_checkpoint(Mlp mlp, const Dataset& dataset, const TrainConfig& config) {
    CheckpointMetadata metadata;
    metadata.seed = config.seed;
    metadata.epochs = config.epochs;
    metadata.batch_size = config.batch_size;
    metadata.adam_alpha = config.learning_rate;
    metadata.val_fraction = config.val_fraction;
    metadata.m = dataset.config.m;
    metadata.omega = dataset.config.omega;
    metadata.hbar_values = dataset.config.hbar_values;
    metadata.dataset_manifest_hash = text::to_hex(text::fnv1a64(manifest_json(dataset)));
    return Checkpoint{std::move(mlp), dataset.grid, std::move(metadata)};
}

inline void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["train_loss"] = report.train_losses;
    j["val_loss"] = report.val_losses;
    j["wall_seconds"] = report.wall_seconds;
    j["gradient_sample_count"] = report.gradient_sample_count;
    j["train_samples"] = report.train_sample_count;
    j["val_samples"] = report.val_sample_count;
    j["checkpoint"] = report.checkpoint_ref;
    text::write_file(path, j.dump(2) + "\n");
}

}  // namespace oscnet
