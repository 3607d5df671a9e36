#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "ff/commands.hpp"
#include "ff/errors.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("FRUGALFLOWS_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "%s\n", msg.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frugal flow models: fit observational data, generate causal benchmarks, evaluate them"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<uint64_t> seed;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file")->required();
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--out", out_path, "output path");
    };

    auto* fit = app.add_subcommand("fit", "fit frugal and propensity flows to a CSV dataset");
    add_common(fit);

    auto* generate = app.add_subcommand("generate", "sample a causal benchmark from a fitted model");
    add_common(generate);

    auto* evaluate = app.add_subcommand("evaluate", "run reference estimators over benchmark CSVs");
    std::vector<std::string> eval_inputs;
    evaluate->add_option("inputs", eval_inputs, "benchmark CSV files");
    add_common(evaluate);

    auto* diagnose = app.add_subcommand("diagnose", "compare correlation matrices of two datasets");
    std::string real_csv, synth_csv;
    diagnose->add_option("real", real_csv, "reference CSV")->required();
    diagnose->add_option("synthetic", synth_csv, "synthetic CSV")->required();
    add_common(diagnose);

    auto* simulate = app.add_subcommand("simulate-dgp", "simulate a ground-truth benchmark process");
    add_common(simulate);

    CLI11_PARSE(app, argc, argv);

    try {
        ff::io::Config cfg = ff::io::Config::parse_file(config_path);
        if (fit->parsed()) {
            auto res = ff::cli::cmd_fit(cfg, seed, out_path);
            info("model written to " + res.model_path);
            info("loss curves written to " + res.loss_csv_path);
            if (res.has_ate) std::printf("estimated_ate %.10g\n", res.estimated_ate);
        } else if (generate->parsed()) {
            auto res = ff::cli::cmd_generate(cfg, seed, out_path);
            info("benchmark written to " + res.data_path);
            info("sidecar written to " + res.sidecar_path);
        } else if (evaluate->parsed()) {
            ff::cli::cmd_evaluate(eval_inputs, cfg, out_path);
            info("estimator table written to " + out_path);
        } else if (diagnose->parsed()) {
            auto res = ff::cli::cmd_diagnose(real_csv, synth_csv, cfg, out_path);
            std::printf("max_abs_difference %.10g\n", res.max_abs_difference);
        } else if (simulate->parsed()) {
            auto res = ff::cli::cmd_simulate_dgp(cfg, seed, out_path);
            info("dataset written to " + res.data_path);
            std::printf("true_ate %.10g\n", res.true_ate);
        }
    } catch (const ff::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
