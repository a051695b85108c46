#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "bpdet/chart.hpp"
#include "bpdet/config.hpp"
#include "bpdet/experiments.hpp"
#include "bpdet/fusion.hpp"
#include "bpdet/metrics.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
    std::string spec_path;
    std::string preset;
    long trials = 0;          // 0: keep file/preset value
    long seed = -1;
    int threads = 0;          // 0: hardware default
};

bpdet::ExperimentSpec load_spec(const CommonOpts& opts) {
    bpdet::ExperimentSpec spec;
    if (!opts.spec_path.empty()) {
        spec = bpdet::spec_from_config(bpdet::load_config_file(opts.spec_path));
    } else if (opts.preset.empty() || opts.preset == "figure1") {
        spec = bpdet::figure1_preset();
    } else {
        throw bpdet::ConfigError("unknown preset '" + opts.preset + "' (available: figure1)");
    }
    if (opts.trials > 0) spec.experiment.trials = opts.trials;
    if (opts.seed >= 0) spec.experiment.seed = static_cast<std::uint64_t>(opts.seed);
    return spec;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--spec", opts.spec_path, "experiment config file");
    cmd->add_option("--preset", opts.preset, "built-in scenario preset (figure1)");
    cmd->add_option("--trials", opts.trials, "override trial count");
    cmd->add_option("--seed", opts.seed, "override master seed");
    cmd->add_option("--threads", opts.threads, "worker count (0 = library default)");
}

void plot_table(const bpdet::MetricsTable& table, const bpdet::ExperimentSpec& spec,
                const std::string& path) {
    bpdet::ChartConfig cfg;
    if (spec.experiment.recipe == bpdet::Recipe::roc_faulty_nodes) {
        cfg.title = "ROC, network average";
        cfg.x_label = "false-alarm probability";
        cfg.y_label = "detection probability";
        cfg.metric = "pd";
        cfg.x_metric = "pf";
    } else {
        cfg.title = "DSNR vs iterations, network average";
        cfg.x_label = "iterations";
        cfg.y_label = "DSNR (dB)";
        cfg.metric = "dsnr_db";
    }
    bpdet::render_chart(table, cfg, path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed detection via belief propagation: simulation laboratory"};
    app.require_subcommand(1);

    CommonOpts run_opts, adapt_opts, predict_opts;
    std::string run_out = "results.csv", run_json, run_plot, run_recipe;
    std::string adapt_out = "weights.txt", adapt_diag;
    std::string predict_out = "predictions.csv";
    std::string validate_path;

    CLI::App* run = app.add_subcommand("run", "run an experiment recipe");
    add_common(run, run_opts);
    run->add_option("--recipe", run_recipe,
                    "override recipe (dsnr_vs_iterations | roc_faulty_nodes)");
    run->add_option("--out", run_out, "CSV output path");
    run->add_option("--json", run_json, "also write JSON to this path");
    run->add_option("--plot", run_plot, "render an SVG chart to this path");

    CLI::App* adapt = app.add_subcommand("adapt", "blind offline adaptation; writes weights");
    add_common(adapt, adapt_opts);
    adapt->add_option("--out", adapt_out, "weights output path");
    adapt->add_option("--diagnostics", adapt_diag, "per-pass diagnostics CSV");

    CLI::App* predict = app.add_subcommand("predict", "analytical tables only (no Monte Carlo)");
    add_common(predict, predict_opts);
    predict->add_option("--out", predict_out, "CSV output path");

    CLI::App* validate = app.add_subcommand("validate", "lint an experiment config");
    validate->add_option("--spec", validate_path, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            bpdet::ExperimentSpec spec = load_spec(run_opts);
            if (!run_recipe.empty()) {
                if (run_recipe == "dsnr_vs_iterations")
                    spec.experiment.recipe = bpdet::Recipe::dsnr_vs_iterations;
                else if (run_recipe == "roc_faulty_nodes")
                    spec.experiment.recipe = bpdet::Recipe::roc_faulty_nodes;
                else
                    throw bpdet::ConfigError("unknown recipe '" + run_recipe + "'");
                spec.experiment.name = run_recipe;
            }
            try {
                bpdet::MetricsTable table = bpdet::run_recipe(spec, run_opts.threads);
                bpdet::emit_csv(table, run_out);
                if (!run_json.empty()) bpdet::emit_json(table, run_json);
                if (!run_plot.empty()) plot_table(table, spec, run_plot);
                std::cout << "wrote " << table.records.size() << " records to " << run_out
                          << "\n";
            } catch (const bpdet::ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "runtime error: " << e.what() << "\n";
                return kExitRuntime;
            }
        } else if (adapt->parsed()) {
            bpdet::ExperimentSpec spec = load_spec(adapt_opts);
            try {
                bpdet::SignatureSet signatures(spec.scenario);
                bpdet::CalibrationRun cal = bpdet::calibrate_reference(spec, signatures);
                bpdet::CalibratedErrorSampler sampler =
                    bpdet::calibrate(cal.reference_powers, spec.errors, spec.topology);
                bpdet::AdaptationDiagnostics diag;
                bpdet::FusionWeights weights =
                    bpdet::adapt_blind(spec, signatures, sampler, &diag);
                bpdet::save_fusion_weights(weights, adapt_out);
                if (!adapt_diag.empty()) {
                    std::ofstream f(adapt_diag);
                    f << "pass,node,tau,label_flips,coefficients\n";
                    for (const auto& row : diag.rows) {
                        f << row.kappa << ',' << row.node + 1 << ',' << row.tau << ','
                          << row.label_flips << ',';
                        for (int i = 0; i < row.c.size(); ++i)
                            f << (i ? ";" : "") << row.c[i];
                        f << "\n";
                    }
                }
                std::cout << "wrote weights for " << weights.c.size() << " nodes to "
                          << adapt_out << "\n";
            } catch (const bpdet::ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "runtime error: " << e.what() << "\n";
                return kExitRuntime;
            }
        } else if (predict->parsed()) {
            bpdet::ExperimentSpec spec = load_spec(predict_opts);
            try {
                bpdet::MetricsTable table = bpdet::predict_tables(spec);
                bpdet::emit_csv(table, predict_out);
                std::cout << "wrote " << table.records.size() << " records to " << predict_out
                          << "\n";
            } catch (const bpdet::ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "runtime error: " << e.what() << "\n";
                return kExitRuntime;
            }
        } else if (validate->parsed()) {
            auto parsed = bpdet::load_config_file(validate_path);
            auto problems = bpdet::validate_config(parsed);
            bool hard_error = false;
            for (const auto& p : problems) {
                std::cerr << p << "\n";
                if (p.rfind("warning:", 0) != 0) hard_error = true;
            }
            if (hard_error) return kExitConfig;
            std::cout << validate_path << ": ok ("
                      << (problems.empty() ? "no warnings" : "warnings above") << ")\n";
        }
    } catch (const bpdet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
