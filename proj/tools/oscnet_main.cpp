// Command-line front end for the oscnet pipeline:
//   generate -> train -> evaluate / sweep / predict
// Logs go to stderr (OSCNET_LOG controls verbosity); data goes to files and
// stdout only. Exit codes: 0 success, 1 I/O or runtime failure, 2 usage or
// validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "oscnet/checkpoint.hpp"
#include "oscnet/dataset.hpp"
#include "oscnet/dynamics.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/eval.hpp"
#include "oscnet/text.hpp"
#include "oscnet/train.hpp"

namespace {

constexpr const char* kVersion = "oscnet 0.1.0";

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* env = std::getenv("OSCNET_LOG");
        if (!env) return LogLevel::kInfo;
        const std::string v(env);
        if (v == "debug") return LogLevel::kDebug;
        if (v == "info") return LogLevel::kInfo;
        if (v == "warn") return LogLevel::kWarn;
        if (v == "error") return LogLevel::kError;
        if (v == "off") return LogLevel::kOff;
        return LogLevel::kInfo;
    }();
    return level;
}

void log_at(LogLevel level, const char* tag, const std::string& message) {
    if (level < log_threshold()) return;
    std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

void log_info(const std::string& message) { log_at(LogLevel::kInfo, "info", message); }
void log_warn(const std::string& message) { log_at(LogLevel::kWarn, "warn", message); }
void log_error(const std::string& message) { log_at(LogLevel::kError, "error", message); }

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += oscnet::text::format_double(values[i]);
    }
    return out;
}

// Comma-separated hbar list. Keeps the literal tokens so sweep CSV columns
// carry exactly what was requested.
std::pair<std::vector<double>, std::vector<std::string>> parse_hbars(const std::string& csv) {
    std::vector<double> values;
    std::vector<std::string> labels;
    for (std::string_view token : oscnet::text::split(csv, ',')) {
        if (token.empty()) throw oscnet::ValidationError("--hbars: empty entry in '" + csv + "'");
        double value = 0.0;
        try {
            value = oscnet::text::parse_double(token, "--hbars");
        } catch (const oscnet::ParseError& e) {
            throw oscnet::ValidationError(e.what());
        }
        values.push_back(value);
        labels.emplace_back(token);
    }
    return {std::move(values), std::move(labels)};
}

std::pair<double, double> parse_window(const std::string& spec) {
    const auto fields = oscnet::text::split(spec, ',');
    if (fields.size() != 2) {
        throw oscnet::ValidationError("--t-window: expected 'LO,HI', got '" + spec + "'");
    }
    try {
        return {oscnet::text::parse_double(fields[0], "--t-window"),
                oscnet::text::parse_double(fields[1], "--t-window")};
    } catch (const oscnet::ParseError& e) {
        throw oscnet::ValidationError(e.what());
    }
}

std::filesystem::path report_path_for(const std::filesystem::path& checkpoint_path) {
    std::filesystem::path p = checkpoint_path;
    p.replace_extension(".report.json");
    return p;
}

struct GenerateOptions {
    std::string out = "dataset.csv";
    std::string hbars = "5.0,2.0,1.0,0.5,0.1,0.01";
    std::size_t num_ic = 1000;
    double t_max = 10.0;
    std::size_t t_steps = 100;
    double ic_low = -2.0;
    double ic_high = 2.0;
    double m = 1.0;
    double omega = 1.0;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

int run_generate(const GenerateOptions& opt) {
    oscnet::GenerationConfig config;
    config.hbar_values = parse_hbars(opt.hbars).first;
    config.num_ic_per_hbar = opt.num_ic;
    config.ic_low = opt.ic_low;
    config.ic_high = opt.ic_high;
    config.t_max = opt.t_max;
    config.t_steps = opt.t_steps;
    config.m = opt.m;
    config.omega = opt.omega;
    config.seed = opt.seed;
    config.validate();

    log_info("generate: out=" + opt.out + " hbars=" + join_doubles(config.hbar_values) +
             " num_ic=" + std::to_string(config.num_ic_per_hbar) +
             " t_max=" + oscnet::text::format_double(config.t_max) +
             " t_steps=" + std::to_string(config.t_steps) +
             " ic=[" + oscnet::text::format_double(config.ic_low) + "," +
             oscnet::text::format_double(config.ic_high) + ")" +
             " m=" + oscnet::text::format_double(config.m) +
             " omega=" + oscnet::text::format_double(config.omega) +
             " seed=" + std::to_string(config.seed) + " threads=" + std::to_string(opt.threads));

    const oscnet::Dataset dataset = oscnet::generate(config, opt.threads);
    oscnet::write_dataset(dataset, opt.out);
    log_info("generate: wrote " + std::to_string(dataset.samples.size()) + " samples to " + opt.out +
             " (manifest " + oscnet::manifest_path_for(opt.out).string() + ")");
    return 0;
}

struct TrainOptions {
    std::string dataset;
    std::string out = "checkpoint.json";
    std::size_t epochs = 100;
    std::size_t batch = 32;
    double lr = 0.001;
    double val_frac = 0.1;
    std::uint64_t seed = 42;
};

int run_train(const TrainOptions& opt) {
    oscnet::TrainConfig config;
    config.epochs = opt.epochs;
    config.batch_size = opt.batch;
    config.learning_rate = opt.lr;
    config.val_fraction = opt.val_frac;
    config.seed = opt.seed;
    config.validate();

    log_info("train: dataset=" + opt.dataset + " out=" + opt.out + " epochs=" + std::to_string(config.epochs) +
             " batch=" + std::to_string(config.batch_size) +
             " lr=" + oscnet::text::format_double(config.learning_rate) +
             " val_frac=" + oscnet::text::format_double(config.val_fraction) +
             " seed=" + std::to_string(config.seed));

    const oscnet::Dataset dataset = oscnet::read_dataset(opt.dataset);
    oscnet::TrainResult result = oscnet::train(dataset, config);
    result.report.checkpoint_ref = opt.out;

    const oscnet::Checkpoint checkpoint = oscnet::make_checkpoint(std::move(result.mlp), dataset, config);
    oscnet::save_checkpoint(checkpoint, opt.out);
    oscnet::write_train_report(result.report, report_path_for(opt.out));

    if (!result.report.train_losses.empty()) {
        log_info("train: first epoch loss " + oscnet::text::format_double(result.report.train_losses.front()) +
                 ", final epoch loss " + oscnet::text::format_double(result.report.train_losses.back()));
    }
    log_info("train: wrote checkpoint " + opt.out + " and report " + report_path_for(opt.out).string() + " in " +
             oscnet::text::format_double(result.report.wall_seconds) + " s");
    return 0;
}

struct SweepOptions {
    std::string checkpoint;
    std::string out = "sweep.csv";
    double x0 = 1.0;
    double p0 = 0.0;
    std::string hbars;   // empty -> training list from the checkpoint
    std::string t_window;
};

int run_sweep(const SweepOptions& opt) {
    const oscnet::Checkpoint checkpoint = oscnet::load_checkpoint(opt.checkpoint);

    std::vector<double> hbars;
    std::vector<std::string> labels;
    if (opt.hbars.empty()) {
        hbars = checkpoint.metadata.hbar_values;
        for (double h : hbars) labels.push_back(oscnet::text::format_double(h));
    } else {
        std::tie(hbars, labels) = parse_hbars(opt.hbars);
    }

    log_info("sweep: checkpoint=" + opt.checkpoint + " out=" + opt.out +
             " x0=" + oscnet::text::format_double(opt.x0) + " p0=" + oscnet::text::format_double(opt.p0) +
             " hbars=" + join_doubles(hbars) +
             (opt.t_window.empty() ? std::string() : " t_window=" + opt.t_window));

    oscnet::SweepTable table = oscnet::hbar_sweep(checkpoint, opt.x0, opt.p0, hbars, labels);
    if (!opt.t_window.empty()) {
        const auto [t_lo, t_hi] = parse_window(opt.t_window);
        table = oscnet::window(table, t_lo, t_hi);
    }
    oscnet::emit_csv(table, opt.out);

    for (const auto& series : table.series) {
        log_info("sweep: hbar=" + series.label + " rmse=" + oscnet::text::format_double(series.rmse) +
                 " max_abs=" + oscnet::text::format_double(series.max_abs));
    }
    log_info("sweep: wrote " + std::to_string(table.grid.size()) + " rows to " + opt.out + " (summary " +
             oscnet::summary_path_for(opt.out).string() + ")");
    return 0;
}

struct EvaluateOptions {
    std::string checkpoint;
    std::string dataset;
};

int run_evaluate(const EvaluateOptions& opt) {
    log_info("evaluate: checkpoint=" + opt.checkpoint + " dataset=" + opt.dataset);

    const oscnet::Checkpoint checkpoint = oscnet::load_checkpoint(opt.checkpoint);
    const oscnet::Dataset dataset = oscnet::read_dataset(opt.dataset);

    const std::string hash = oscnet::text::to_hex(oscnet::text::fnv1a64(oscnet::manifest_json(dataset)));
    if (hash != checkpoint.metadata.dataset_manifest_hash) {
        log_warn("evaluate: dataset manifest hash " + hash + " differs from the checkpoint's " +
                 checkpoint.metadata.dataset_manifest_hash + "; held-out split may not match training");
    }

    oscnet::Dataset eval_set{dataset.config, dataset.grid, {}};
    if (checkpoint.metadata.val_fraction > 0.0) {
        oscnet::Rng split_rng(oscnet::derive_seed(checkpoint.metadata.seed, oscnet::kStreamSplit));
        auto [train_set, val_set] = oscnet::split(dataset, checkpoint.metadata.val_fraction, split_rng);
        if (val_set.samples.empty()) {
            log_warn("evaluate: held-out split is empty at val_fraction " +
                     oscnet::text::format_double(checkpoint.metadata.val_fraction) +
                     "; evaluating the full dataset");
            val_set.samples = dataset.samples;
        } else {
            log_info("evaluate: re-derived held-out split, " + std::to_string(val_set.samples.size()) +
                     " validation samples");
        }
        eval_set = std::move(val_set);
    } else {
        log_info("evaluate: checkpoint trained without a validation split; evaluating the full dataset");
        eval_set.samples = dataset.samples;
    }

    const double mse = oscnet::evaluate_loss(checkpoint.mlp, eval_set);
    std::printf("held_out_mse,%s\n", oscnet::text::format_double(mse).c_str());
    std::printf("hbar,count,rmse_vs_classical,max_abs\n");
    for (const auto& stratum : oscnet::per_hbar_deviation(checkpoint, eval_set)) {
        std::printf("%s,%zu,%s,%s\n", oscnet::text::format_double(stratum.hbar).c_str(), stratum.count,
                    oscnet::text::format_double(stratum.rmse).c_str(),
                    oscnet::text::format_double(stratum.max_abs).c_str());
    }
    return 0;
}

struct PredictOptions {
    std::string checkpoint;
    double x0 = 0.0;
    double p0 = 0.0;
    double hbar = 0.0;
};

int run_predict(const PredictOptions& opt) {
    log_info("predict: checkpoint=" + opt.checkpoint + " x0=" + oscnet::text::format_double(opt.x0) +
             " p0=" + oscnet::text::format_double(opt.p0) + " hbar=" + oscnet::text::format_double(opt.hbar));

    const oscnet::Checkpoint checkpoint = oscnet::load_checkpoint(opt.checkpoint);
    const oscnet::Trajectory trajectory = oscnet::predict_trajectory(checkpoint, opt.x0, opt.p0, opt.hbar);
    std::printf("t,x\n");
    for (std::size_t i = 0; i < trajectory.grid.size(); ++i) {
        std::printf("%s,%s\n", oscnet::text::format_double(trajectory.grid[i]).c_str(),
                    oscnet::text::format_double(trajectory.x_values[i]).c_str());
    }
    return 0;
}

template <typename Body>
int guarded(Body&& body) {
    try {
        return body();
    } catch (const oscnet::ValidationError& e) {
        log_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log_error(e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate pipeline for harmonic-oscillator expectation-value trajectories"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "Read options from an INI/TOML file (flags override it)");
    app.require_subcommand(1);

    GenerateOptions gen;
    CLI::App* cmd_generate = app.add_subcommand(
        "generate", "Integrate the Ehrenfest equations over the hbar grid and write a labeled dataset");
    cmd_generate->add_option("--out", gen.out, "Dataset CSV path (manifest lands next to it)")
        ->capture_default_str();
    cmd_generate->add_option("--hbars", gen.hbars, "Comma-separated hbar values")->capture_default_str();
    cmd_generate->add_option("--num-ic", gen.num_ic, "Initial conditions per hbar")->capture_default_str();
    cmd_generate->add_option("--t-max", gen.t_max, "End of the time grid")->capture_default_str();
    cmd_generate->add_option("--t-steps", gen.t_steps, "Number of grid points")->capture_default_str();
    cmd_generate->add_option("--ic-low", gen.ic_low, "Lower edge of the sampling box")->capture_default_str();
    cmd_generate->add_option("--ic-high", gen.ic_high, "Upper edge of the sampling box")->capture_default_str();
    cmd_generate->add_option("--m", gen.m, "Oscillator mass")->capture_default_str();
    cmd_generate->add_option("--omega", gen.omega, "Angular frequency")->capture_default_str();
    cmd_generate->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    cmd_generate->add_option("--threads", gen.threads, "Worker threads (any count gives identical output)")
        ->capture_default_str();

    TrainOptions tr;
    CLI::App* cmd_train = app.add_subcommand("train", "Train the MLP surrogate on a generated dataset");
    cmd_train->add_option("--dataset", tr.dataset, "Dataset CSV path")->required();
    cmd_train->add_option("--out", tr.out, "Checkpoint path (report lands next to it)")->capture_default_str();
    cmd_train->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
    cmd_train->add_option("--batch", tr.batch, "Mini-batch size")->capture_default_str();
    cmd_train->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    cmd_train->add_option("--val-frac", tr.val_frac, "Validation fraction, stratified by hbar")
        ->capture_default_str();
    cmd_train->add_option("--seed", tr.seed, "Master seed (split, init, shuffles)")->capture_default_str();

    SweepOptions sw;
    CLI::App* cmd_sweep = app.add_subcommand(
        "sweep", "Predict one initial condition across hbar values and compare to the classical trajectory");
    cmd_sweep->add_option("--checkpoint", sw.checkpoint, "Checkpoint path")->required();
    cmd_sweep->add_option("--out", sw.out, "Sweep CSV path (summary lands next to it)")->capture_default_str();
    cmd_sweep->add_option("--x0", sw.x0, "Initial position expectation")->capture_default_str();
    cmd_sweep->add_option("--p0", sw.p0, "Initial momentum expectation")->capture_default_str();
    cmd_sweep->add_option("--hbars", sw.hbars, "Comma-separated hbar values (default: the training list)");
    cmd_sweep->add_option("--t-window", sw.t_window, "Restrict rows to 'LO,HI' (e.g. 2.0,4.0)");

    EvaluateOptions ev;
    CLI::App* cmd_evaluate =
        app.add_subcommand("evaluate", "Held-out MSE and per-hbar deviation from the classical trajectory");
    cmd_evaluate->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
    cmd_evaluate->add_option("--dataset", ev.dataset, "Dataset CSV path")->required();

    PredictOptions pr;
    CLI::App* cmd_predict = app.add_subcommand("predict", "Print one predicted trajectory as CSV on stdout");
    cmd_predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint path")->required();
    cmd_predict->add_option("--x0", pr.x0, "Initial position expectation")->required();
    cmd_predict->add_option("--p0", pr.p0, "Initial momentum expectation")->required();
    cmd_predict->add_option("--hbar", pr.hbar, "Quantum parameter fed to the network")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    if (*cmd_generate) return guarded([&] { return run_generate(gen); });
    if (*cmd_train) return guarded([&] { return run_train(tr); });
    if (*cmd_sweep) return guarded([&] { return run_sweep(sw); });
    if (*cmd_evaluate) return guarded([&] { return run_evaluate(ev); });
    if (*cmd_predict) return guarded([&] { return run_predict(pr); });
    return 2;
}
