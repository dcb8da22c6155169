#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oscnet/dynamics.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/rng.hpp"
#include "oscnet/text.hpp"

namespace oscnet {

inline constexpr int kDatasetFormatVersion = 1;

// Full recipe for one dataset: the physical parameters, the sampling box for
// initial conditions, the time grid, and the master seed.
struct GenerationConfig {
    std::vector<double> hbar_values;
    std::size_t num_ic_per_hbar = 1000;
    double ic_low = -2.0;
    double ic_high = 2.0;
    double t_max = 10.0;
    std::size_t t_steps = 100;
    double m = 1.0;
    double omega = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (hbar_values.empty()) throw ValidationError("GenerationConfig: hbar_values must be non-empty");
        for (std::size_t i = 0; i < hbar_values.size(); ++i) {
            if (!(std::isfinite(hbar_values[i]) && hbar_values[i] > 0.0)) {
                throw ValidationError("GenerationConfig: hbar_values must be finite and positive");
            }
            for (std::size_t k = 0; k < i; ++k) {
                if (hbar_values[k] == hbar_values[i]) {
                    throw ValidationError("GenerationConfig: hbar_values must be distinct");
                }
            }
        }
        if (num_ic_per_hbar == 0) throw ValidationError("GenerationConfig: num_ic_per_hbar must be positive");
        if (!(std::isfinite(ic_low) && std::isfinite(ic_high) && ic_low < ic_high)) {
            throw ValidationError("GenerationConfig: requires ic_low < ic_high");
        }
        if (!(std::isfinite(t_max) && t_max > 0.0)) throw ValidationError("GenerationConfig: t_max must be > 0");
        if (t_steps < 2) throw ValidationError("GenerationConfig: t_steps must be at least 2");
        OscillatorParams{m, omega, hbar_values.front()}.validate();
    }

    TimeGrid make_grid() const { return TimeGrid::linspace(0.0, t_max, t_steps); }

    bool operator==(const GenerationConfig&) const = default;
};

// One labeled example: the network input (x0, p0, hbar) and the trajectory
// label on the dataset's shared grid.
struct Sample {
    double x0 = 0.0;
    double p0 = 0.0;
    double hbar = 0.0;
    std::vector<double> label;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    GenerationConfig config;   // recorded verbatim in the manifest
    TimeGrid grid;             // shared by every sample's label
    std::vector<Sample> samples;

    Trajectory label_trajectory(std::size_t i) const { return Trajectory{grid, samples[i].label}; }

    bool operator==(const Dataset&) const = default;
};

// n (x0, p0) pairs, each coordinate independently uniform on [low, high).
inline std::vector<std::pair<double, double>> sample_initial_conditions(std::size_t n, double low, double high,
                                                                        Rng& rng) {
    if (!(std::isfinite(low) && std::isfinite(high) && low < high)) {
        throw ValidationError("sample_initial_conditions: requires low < high");
    }
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = rng.uniform(low, high);
        const double p0 = rng.uniform(low, high);
        pairs.emplace_back(x0, p0);
    }
    return pairs;
}

// Generates len(hbar_values) * num_ic_per_hbar samples. Initial conditions
// are drawn fresh for every hbar (never shared across the hbar loop), each
// sample from its own sub-seed keyed by the flat sample index, so any thread
// count produces the identical dataset.
inline Dataset generate(const GenerationConfig& config, unsigned threads = 1) {
    config.validate();
    const TimeGrid grid = config.make_grid();
    const std::size_t total = config.hbar_values.size() * config.num_ic_per_hbar;

    Dataset dataset{config, grid, std::vector<Sample>(total)};

    const auto fill_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const double hbar = config.hbar_values[k / config.num_ic_per_hbar];
            Rng rng(derive_seed(config.seed, k));
            const double x0 = rng.uniform(config.ic_low, config.ic_high);
            const double p0 = rng.uniform(config.ic_low, config.ic_high);
            Trajectory label =
                integrate_trajectory(PhaseState{x0, p0}, grid, OscillatorParams{config.m, config.omega, hbar});
            dataset.samples[k] = Sample{x0, p0, hbar, std::move(label.x_values)};
        }
    };

    if (threads <= 1 || total < 2) {
        fill_range(0, total);
        return dataset;
    }

    const unsigned worker_count = std::min<unsigned>(threads, static_cast<unsigned>(total));
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(worker_count);
    for (unsigned w = 0; w < worker_count; ++w) {
        const std::size_t begin = total * w / worker_count;
        const std::size_t end = total * (w + 1) / worker_count;
        workers.emplace_back([&, w, begin, end] {
            try {
                fill_range(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& error : errors) {
        if (error) std::rethrow_exception(error);
    }
    return dataset;
}

// Random partition stratified by hbar: each stratum is shuffled on its own
// and donates round(val_fraction * stratum size) samples to the validation
// side. Sample order within each side follows the input dataset.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset, double val_fraction, Rng& rng) {
    if (dataset.samples.empty()) throw ValidationError("split: dataset is empty");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw ValidationError("split: val_fraction must lie in [0, 1)");
    }

    // Strata ordered by first appearance.
    std::vector<double> stratum_hbars;
    std::vector<std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const double hbar = dataset.samples[i].hbar;
        std::size_t s = 0;
        while (s < stratum_hbars.size() && stratum_hbars[s] != hbar) ++s;
        if (s == stratum_hbars.size()) {
            stratum_hbars.push_back(hbar);
            strata.emplace_back();
        }
        strata[s].push_back(i);
    }

    std::vector<char> in_val(dataset.samples.size(), 0);
    for (auto& stratum : strata) {
        const auto n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(stratum.size())));
        shuffle(stratum, rng);
        for (std::size_t i = 0; i < n_val && i < stratum.size(); ++i) in_val[stratum[i]] = 1;
    }

    Dataset train{dataset.config, dataset.grid, {}};
    Dataset val{dataset.config, dataset.grid, {}};
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        (in_val[i] ? val : train).samples.push_back(dataset.samples[i]);
    }
    return {std::move(train), std::move(val)};
}

namespace detail {

inline std::string label_column_name(std::size_t index, std::size_t t_steps) {
    std::size_t width = 3;
    for (std::size_t v = t_steps > 0 ? t_steps - 1 : 0; v >= 1000; v /= 10) ++width;
    std::string digits = std::to_string(index);
    return "x_t_" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace detail

// Serialized manifest: config, explicit time grid, format version. This
// exact string is what gets hashed into checkpoint metadata.
inline std::string manifest_json(const Dataset& dataset) {
    nlohmann::json j;
    j["format_version"] = kDatasetFormatVersion;
    j["generator"] = "oscnet";
    j["config"] = {
        {"hbar_values", dataset.config.hbar_values},
        {"num_ic_per_hbar", dataset.config.num_ic_per_hbar},
        {"ic_low", dataset.config.ic_low},
        {"ic_high", dataset.config.ic_high},
        {"t_max", dataset.config.t_max},
        {"t_steps", dataset.config.t_steps},
        {"m", dataset.config.m},
        {"omega", dataset.config.omega},
        {"seed", dataset.config.seed},
    };
    j["time_grid"] = dataset.grid.points();
    return j.dump(2) + "\n";
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path) {
    std::filesystem::path p = dataset_path;
    p.replace_extension(".manifest.json");
    return p;
}

inline void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    const std::size_t t_steps = dataset.grid.size();
    std::string csv = "x0,p0,hbar";
    for (std::size_t t = 0; t < t_steps; ++t) {
        csv += ',';
        csv += detail::label_column_name(t, t_steps);
    }
    csv += '\n';
    for (const auto& sample : dataset.samples) {
        csv += text::format_double(sample.x0);
        csv += ',';
        csv += text::format_double(sample.p0);
        csv += ',';
        csv += text::format_double(sample.hbar);
        for (double v : sample.label) {
            csv += ',';
            csv += text::format_double(v);
        }
        csv += '\n';
    }
    text::write_file(path, csv);
    text::write_file(manifest_path_for(path), manifest_json(dataset));
}

inline Dataset read_dataset(const std::filesystem::path& path) {
    const std::filesystem::path manifest_path = manifest_path_for(path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text::read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest '" + manifest_path.string() + "': " + e.what());
    }

    const auto require = [&](const nlohmann::json& j, const char* field) -> const nlohmann::json& {
        const auto it = j.find(field);
        if (it == j.end()) {
            throw ParseError("manifest '" + manifest_path.string() + "': missing field '" + field + "'");
        }
        return *it;
    };

    if (require(manifest, "format_version").get<int>() != kDatasetFormatVersion) {
        throw ValidationError("manifest: unsupported format_version");
    }

    const auto& cj = require(manifest, "config");
    GenerationConfig config;
    config.hbar_values = require(cj, "hbar_values").get<std::vector<double>>();
    config.num_ic_per_hbar = require(cj, "num_ic_per_hbar").get<std::size_t>();
    config.ic_low = require(cj, "ic_low").get<double>();
    config.ic_high = require(cj, "ic_high").get<double>();
    config.t_max = require(cj, "t_max").get<double>();
    config.t_steps = require(cj, "t_steps").get<std::size_t>();
    config.m = require(cj, "m").get<double>();
    config.omega = require(cj, "omega").get<double>();
    config.seed = require(cj, "seed").get<std::uint64_t>();
    config.validate();

    TimeGrid grid(require(manifest, "time_grid").get<std::vector<double>>());
    if (grid.size() != config.t_steps) {
        throw ValidationError("manifest: time_grid length " + std::to_string(grid.size()) +
                              " != config t_steps " + std::to_string(config.t_steps));
    }

    const std::string csv = text::read_file(path);
    Dataset dataset{std::move(config), std::move(grid), {}};

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < csv.size()) {
        std::size_t eol = csv.find('\n', pos);
        if (eol == std::string::npos) eol = csv.size();
        std::string_view line(csv.data() + pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        const auto fields = text::split(line, ',');
        if (!header_seen) {
            if (fields.size() < 3 || fields[0] != "x0" || fields[1] != "p0" || fields[2] != "hbar") {
                throw ParseError(path.string() + " line 1: expected header starting with x0,p0,hbar");
            }
            if (fields.size() != 3 + dataset.config.t_steps) {
                throw ValidationError(path.string() + ": header has " + std::to_string(fields.size() - 3) +
                                      " x_t columns, manifest t_steps is " +
                                      std::to_string(dataset.config.t_steps));
            }
            header_seen = true;
            continue;
        }

        if (fields.size() != 3 + dataset.config.t_steps) {
            throw ParseError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(3 + dataset.config.t_steps) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string context = path.string() + " line " + std::to_string(line_no);
        Sample sample;
        sample.x0 = text::parse_double(fields[0], context + " field x0");
        sample.p0 = text::parse_double(fields[1], context + " field p0");
        sample.hbar = text::parse_double(fields[2], context + " field hbar");
        sample.label.reserve(dataset.config.t_steps);
        for (std::size_t t = 0; t < dataset.config.t_steps; ++t) {
            const double v = text::parse_double(fields[3 + t], context + " field " +
                                                detail::label_column_name(t, dataset.config.t_steps));
            if (!std::isfinite(v)) {
                throw ParseError(context + ": non-finite label value");
            }
            sample.label.push_back(v);
        }
        if (!std::isfinite(sample.x0) || !std::isfinite(sample.p0) || !std::isfinite(sample.hbar)) {
            throw ParseError(context + ": non-finite input value");
        }
        dataset.samples.push_back(std::move(sample));
    }
    if (!header_seen) throw ParseError(path.string() + ": empty file, expected a header row");
    return dataset;
}

}  // namespace oscnet
