#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ff/benchmark.hpp"
#include "ff/config.hpp"
#include "ff/data.hpp"
#include "ff/dgp.hpp"
#include "ff/train.hpp"

namespace ff::cli {

// Config-section translators shared by the commands and the python module.
Schema schema_from_config(const io::Config& cfg);
TrainConfig train_config_from_config(const io::Config& cfg, std::optional<uint64_t> seed_override);
dgp::DgpSpec dgp_spec_from_config(const io::Config& cfg);
gen::BenchmarkSpec benchmark_spec_from_config(const io::Config& cfg, std::optional<uint64_t> seed_override);

struct FitResult {
    std::string model_path;
    std::string loss_csv_path;
    double estimated_ate = 0.0;
    bool has_ate = false;
};

// Fits covariate margins, the frugal flow and the propensity flow from the
// CSV named in [io] data, then writes the model bundle and a loss-curve CSV.
FitResult cmd_fit(const io::Config& cfg, std::optional<uint64_t> seed, const std::string& out_path);

struct GenerateResult {
    std::string data_path;
    std::string sidecar_path;
};

// Samples a benchmark from a saved model bundle per [benchmark]; writes the
// dataset CSV and a sidecar recording the full spec, seed and model
// fingerprint so the file can be regenerated exactly.
GenerateResult cmd_generate(const io::Config& cfg, std::optional<uint64_t> seed, const std::string& out_path);

// Per-dataset estimator table; writes point estimates and 2-sigma intervals
// per method plus a pooled summary row per method.
void cmd_evaluate(const std::vector<std::string>& csv_paths, const io::Config& cfg,
                  const std::string& out_path);

struct DiagnoseResult {
    double max_abs_difference = 0.0;
};

// Pearson correlation matrices over (covariates, outcome) of two datasets and
// their maximum entrywise difference.
DiagnoseResult cmd_diagnose(const std::string& real_csv, const std::string& synth_csv,
                            const io::Config& cfg, const std::string& out_path);

struct SimulateResult {
    std::string data_path;
    double true_ate = 0.0;
};

SimulateResult cmd_simulate_dgp(const io::Config& cfg, std::optional<uint64_t> seed,
                                const std::string& out_path);

}  // namespace ff::cli
