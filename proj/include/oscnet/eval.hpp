#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "oscnet/checkpoint.hpp"
#include "oscnet/dataset.hpp"
#include "oscnet/dynamics.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/nn.hpp"
#include "oscnet/text.hpp"

namespace oscnet {

// One predicted trajectory of a sweep, with its deviation from the classical
// column. `label` is the literal decimal used in CSV column names, normally
// the token the request was made with.
struct SweepSeries {
    std::string label;
    double hbar = 0.0;
    std::vector<double> x;
    double rmse = 0.0;
    double max_abs = 0.0;

    bool operator==(const SweepSeries&) const = default;
};

struct SweepTable {
    TimeGrid grid;
    std::vector<double> classical;
    std::vector<SweepSeries> series;

    bool operator==(const SweepTable&) const = default;
};

namespace detail {

inline void deviation_metrics(const std::vector<double>& predicted, const std::vector<double>& classical,
                              double& rmse, double& max_abs) {
    double sse = 0.0;
    max_abs = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double diff = predicted[i] - classical[i];
        sse += diff * diff;
        max_abs = std::max(max_abs, std::abs(diff));
    }
    rmse = std::sqrt(sse / static_cast<double>(predicted.size()));
}

}  // namespace detail

// Single forward pass of (x0, p0, hbar), bound to the checkpoint's grid.
inline Trajectory predict_trajectory(const Checkpoint& checkpoint, double x0, double p0, double hbar) {
    if (!(std::isfinite(x0) && std::isfinite(p0) && std::isfinite(hbar))) {
        throw ValidationError("predict_trajectory: inputs must be finite");
    }
    if (checkpoint.grid.size() != checkpoint.mlp.output_dim()) {
        throw ValidationError("predict_trajectory: checkpoint grid does not match network output dim");
    }
    const Matrix out = forward(checkpoint.mlp, Matrix(1, 3, {x0, p0, hbar}));
    return Trajectory{checkpoint.grid, std::vector<double>(out.row(0), out.row(0) + out.cols())};
}

// Predictions for one initial condition across a list of hbar values, next
// to the closed-form classical trajectory (the hbar = 0 reference), with
// RMSE and max-abs deviation per hbar.
inline SweepTable hbar_sweep(const Checkpoint& checkpoint, double x0, double p0,
                             const std::vector<double>& hbars, const std::vector<std::string>& labels = {}) {
    if (hbars.empty()) throw ValidationError("hbar_sweep: hbars must be non-empty");
    if (!labels.empty() && labels.size() != hbars.size()) {
        throw ValidationError("hbar_sweep: labels length does not match hbars");
    }

    const OscillatorParams classical_params{checkpoint.metadata.m, checkpoint.metadata.omega, 0.0};
    SweepTable table{checkpoint.grid,
                     classical_closed_form(PhaseState{x0, p0}, checkpoint.grid, classical_params).x_values,
                     {}};
    table.series.reserve(hbars.size());
    for (std::size_t i = 0; i < hbars.size(); ++i) {
        SweepSeries series;
        series.hbar = hbars[i];
        series.label = labels.empty() ? text::format_double(hbars[i]) : labels[i];
        series.x = predict_trajectory(checkpoint, x0, p0, hbars[i]).x_values;
        detail::deviation_metrics(series.x, table.classical, series.rmse, series.max_abs);
        table.series.push_back(std::move(series));
    }
    return table;
}

// Rows restricted to grid points with t_lo <= t <= t_hi; deviation summaries
// recomputed over the window.
inline SweepTable window(const SweepTable& table, double t_lo, double t_hi) {
    if (!(t_lo < t_hi)) throw ValidationError("window: requires t_lo < t_hi");

    std::size_t begin = 0;
    while (begin < table.grid.size() && table.grid[begin] < t_lo) ++begin;
    std::size_t end = begin;
    while (end < table.grid.size() && table.grid[end] <= t_hi) ++end;

    if (begin == end) {
        throw ValidationError("window: [" + text::format_double(t_lo) + ", " + text::format_double(t_hi) +
                              "] contains no grid points");
    }
    if (end - begin < 2) {
        throw ValidationError("window: [" + text::format_double(t_lo) + ", " + text::format_double(t_hi) +
                              "] contains fewer than 2 grid points");
    }

    SweepTable out{TimeGrid(std::vector<double>(table.grid.points().begin() + static_cast<std::ptrdiff_t>(begin),
                                                table.grid.points().begin() + static_cast<std::ptrdiff_t>(end))),
                   std::vector<double>(table.classical.begin() + static_cast<std::ptrdiff_t>(begin),
                                       table.classical.begin() + static_cast<std::ptrdiff_t>(end)),
                   {}};
    out.series.reserve(table.series.size());
    for (const auto& series : table.series) {
        SweepSeries windowed;
        windowed.label = series.label;
        windowed.hbar = series.hbar;
        windowed.x.assign(series.x.begin() + static_cast<std::ptrdiff_t>(begin),
                          series.x.begin() + static_cast<std::ptrdiff_t>(end));
        detail::deviation_metrics(windowed.x, out.classical, windowed.rmse, windowed.max_abs);
        out.series.push_back(std::move(windowed));
    }
    return out;
}

inline std::filesystem::path summary_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".summary.csv");
    return p;
}

// Writes `t,classical,pred_hbar_<label>...` rows plus a sibling summary file
// with per-hbar RMSE and max-abs deviation.
inline void emit_csv(const SweepTable& table, const std::filesystem::path& path) {
    std::string csv = "t,classical";
    for (const auto& series : table.series) {
        csv += ",pred_hbar_";
        csv += series.label;
    }
    csv += '\n';
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        csv += text::format_double(table.grid[i]);
        csv += ',';
        csv += text::format_double(table.classical[i]);
        for (const auto& series : table.series) {
            csv += ',';
            csv += text::format_double(series.x[i]);
        }
        csv += '\n';
    }
    text::write_file(path, csv);

    std::string summary = "hbar,rmse,max_abs\n";
    for (const auto& series : table.series) {
        summary += series.label;
        summary += ',';
        summary += text::format_double(series.rmse);
        summary += ',';
        summary += text::format_double(series.max_abs);
        summary += '\n';
    }
    text::write_file(summary_path_for(path), summary);
}

// Deviation of predictions from the classical closed form over one hbar
// stratum of a dataset. RMSE is per time point: sqrt(sum of squared
// deviations / (samples * grid length)).
struct StratumMetrics {
    double hbar = 0.0;
    std::size_t count = 0;
    double rmse = 0.0;
    double max_abs = 0.0;
};

// Per-hbar deviation of network predictions from the closed-form classical
// trajectory of each sample's initial condition. Strata appear in order of
// first appearance in the dataset.
inline std::vector<StratumMetrics> per_hbar_deviation(const Checkpoint& checkpoint, const Dataset& dataset) {
    if (dataset.samples.empty()) throw ValidationError("per_hbar_deviation: dataset is empty");
    if (!(dataset.grid == checkpoint.grid)) {
        throw ValidationError("per_hbar_deviation: dataset grid differs from checkpoint grid");
    }

    const OscillatorParams params{dataset.config.m, dataset.config.omega, 0.0};
    std::vector<StratumMetrics> strata;
    std::vector<double> sse;
    for (const auto& sample : dataset.samples) {
        std::size_t s = 0;
        while (s < strata.size() && strata[s].hbar != sample.hbar) ++s;
        if (s == strata.size()) {
            strata.push_back(StratumMetrics{sample.hbar, 0, 0.0, 0.0});
            sse.push_back(0.0);
        }

        const Trajectory pred = predict_trajectory(checkpoint, sample.x0, sample.p0, sample.hbar);
        const Trajectory classical =
            classical_closed_form(PhaseState{sample.x0, sample.p0}, dataset.grid, params);
        for (std::size_t t = 0; t < pred.x_values.size(); ++t) {
            const double diff = pred.x_values[t] - classical.x_values[t];
            sse[s] += diff * diff;
            strata[s].max_abs = std::max(strata[s].max_abs, std::abs(diff));
        }
        strata[s].count += 1;
    }
    for (std::size_t s = 0; s < strata.size(); ++s) {
        strata[s].rmse =
            std::sqrt(sse[s] / (static_cast<double>(strata[s].count) * static_cast<double>(dataset.grid.size())));
    }
    return strata;
}

}  // namespace oscnet
