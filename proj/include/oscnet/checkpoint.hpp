#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "oscnet/dynamics.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/nn.hpp"
#include "oscnet/text.hpp"

namespace oscnet {

inline constexpr int kCheckpointFormatVersion = 1;

// Everything needed to reproduce or audit a training run, minus wall time
// (which lives in the train report, so checkpoints stay byte-stable).
struct CheckpointMetadata {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    double adam_alpha = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-7;
    double val_fraction = 0.1;
    double m = 1.0;
    double omega = 1.0;
    std::vector<double> hbar_values;     // training grid of the quantum parameter
    std::string dataset_manifest_hash;   // fnv1a64 hex of the dataset manifest
    std::string precision = "float64";

    bool operator==(const CheckpointMetadata&) const = default;
};

// A trained network bound to the time grid its outputs are sampled on.
struct Checkpoint {
    Mlp mlp;
    TimeGrid grid;
    CheckpointMetadata metadata;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end()) throw ValidationError(std::string("checkpoint: missing field '") + field + "'");
    return *it;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    if (checkpoint.mlp.layers().empty()) throw ValidationError("save_checkpoint: uninitialized network");
    if (checkpoint.grid.size() != checkpoint.mlp.output_dim()) {
        throw ValidationError("save_checkpoint: time grid length " + std::to_string(checkpoint.grid.size()) +
                              " != network output dim " + std::to_string(checkpoint.mlp.output_dim()));
    }

    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["dims"] = checkpoint.mlp.dims();

    std::vector<std::string> activations;
    for (const auto& layer : checkpoint.mlp.layers()) activations.emplace_back(activation_name(layer.activation));
    j["activations"] = activations;

    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (const auto& layer : checkpoint.mlp.layers()) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            rows.push_back(std::vector<double>(layer.weights.row(r), layer.weights.row(r) + layer.in_dim()));
        }
        weights.push_back(std::move(rows));
        biases.push_back(layer.biases);
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["time_grid"] = checkpoint.grid.points();

    const auto& md = checkpoint.metadata;
    j["metadata"] = {
        {"seed", md.seed},
        {"epochs", md.epochs},
        {"batch_size", md.batch_size},
        {"adam", {{"alpha", md.adam_alpha}, {"beta1", md.adam_beta1}, {"beta2", md.adam_beta2}, {"epsilon", md.adam_epsilon}}},
        {"val_fraction", md.val_fraction},
        {"m", md.m},
        {"omega", md.omega},
        {"hbar_values", md.hbar_values},
        {"dataset_manifest_hash", md.dataset_manifest_hash},
        {"precision", md.precision},
    };

    text::write_file(path, j.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("checkpoint '" + path.string() + "': " + e.what());
    }

    const auto& version = detail::require_field(j, "format_version");
    if (!version.is_number_integer() || version.get<int>() != kCheckpointFormatVersion) {
        throw ValidationError("checkpoint: field 'format_version' must be " +
                              std::to_string(kCheckpointFormatVersion));
    }

    const auto dims = detail::require_field(j, "dims").get<std::vector<std::size_t>>();
    const auto activation_names = detail::require_field(j, "activations").get<std::vector<std::string>>();
    if (dims.size() < 2) throw ValidationError("checkpoint: field 'dims' must list at least 2 dims");
    if (activation_names.size() != dims.size() - 1) {
        throw ValidationError("checkpoint: field 'activations' length does not match 'dims'");
    }

    const auto& weights = detail::require_field(j, "weights");
    const auto& biases = detail::require_field(j, "biases");
    if (!weights.is_array() || weights.size() != dims.size() - 1) {
        throw ValidationError("checkpoint: field 'weights' must hold one matrix per layer");
    }
    if (!biases.is_array() || biases.size() != dims.size() - 1) {
        throw ValidationError("checkpoint: field 'biases' must hold one vector per layer");
    }

    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        const auto& wl = weights[l];
        if (!wl.is_array() || wl.size() != out) {
            throw ValidationError("checkpoint: field 'weights[" + std::to_string(l) + "]' must have " +
                                  std::to_string(out) + " rows");
        }
        std::vector<double> flat;
        flat.reserve(out * in);
        for (const auto& row : wl) {
            const auto values = row.get<std::vector<double>>();
            if (values.size() != in) {
                throw ValidationError("checkpoint: field 'weights[" + std::to_string(l) + "]' row length != " +
                                      std::to_string(in));
            }
            flat.insert(flat.end(), values.begin(), values.end());
        }
        auto bias = biases[l].get<std::vector<double>>();
        if (bias.size() != out) {
            throw ValidationError("checkpoint: field 'biases[" + std::to_string(l) + "]' length != " +
                                  std::to_string(out));
        }
        layers.push_back(DenseLayer{Matrix(out, in, std::move(flat)), std::move(bias),
                                    activation_from_name(activation_names[l])});
    }

    TimeGrid grid(detail::require_field(j, "time_grid").get<std::vector<double>>());
    if (grid.size() != dims.back()) {
        throw ValidationError("checkpoint: field 'time_grid' length " + std::to_string(grid.size()) +
                              " != output dim " + std::to_string(dims.back()));
    }

    const auto& md = detail::require_field(j, "metadata");
    CheckpointMetadata metadata;
    metadata.seed = detail::require_field(md, "seed").get<std::uint64_t>();
    metadata.epochs = detail::require_field(md, "epochs").get<std::size_t>();
    metadata.batch_size = detail::require_field(md, "batch_size").get<std::size_t>();
    const auto& adam = detail::require_field(md, "adam");
    metadata.adam_alpha = detail::require_field(adam, "alpha").get<double>();
    metadata.adam_beta1 = detail::require_field(adam, "beta1").get<double>();
    metadata.adam_beta2 = detail::require_field(adam, "beta2").get<double>();
    metadata.adam_epsilon = detail::require_field(adam, "epsilon").get<double>();
    metadata.val_fraction = detail::require_field(md, "val_fraction").get<double>();
    metadata.m = detail::require_field(md, "m").get<double>();
    metadata.omega = detail::require_field(md, "omega").get<double>();
    metadata.hbar_values = detail::require_field(md, "hbar_values").get<std::vector<double>>();
    metadata.dataset_manifest_hash = detail::require_field(md, "dataset_manifest_hash").get<std::string>();
    metadata.precision = detail::require_field(md, "precision").get<std::string>();

    return Checkpoint{Mlp(std::move(layers)), std::move(grid), std::move(metadata)};
}

}  // namespace oscnet
