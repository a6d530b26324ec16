#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace axebench {

/// Everything that determines a run's outputs. `out` and `jobs` are execution
/// details: they are never persisted, so reruns into another directory or at
/// another parallelism degree compare byte-identically.
struct RunConfig {
    std::string command;  // evaluate | explain | attack | region-grid | principles | report
    /// Preset name (german_credit, compas, communities_crime) or CSV path.
    /// attack accepts a comma-separated list of presets.
    std::string dataset;
    std::string schema;
    /// "kind:rows=R,cols=C,seed=S,..."; used when dataset is empty.
    std::string synthetic;
    /// logistic | mlp | rule:<column> | <model.json>
    std::string model = "logistic";
    /// gradient | integrated-gradients | local-surrogate | kernel-shapley | manual:<column>
    std::string explainer = "gradient";
    /// Explanation CSV to evaluate instead of running the explainer.
    std::string explanations;
    /// e* for ground-truth metrics: "model" (linear coefficients) or comma-separated values.
    std::string reference = "model";
    /// Empty selects the command's default set.
    std::vector<std::string> metrics;
    /// 0 selects the command default (2 for region-grid, 1 otherwise).
    std::size_t n = 0;
    std::vector<std::size_t> ks{5};
    bool include_self = false;
    std::size_t num_perturbations = 100;
    double sigma = 0.5;
    std::size_t explainer_samples = 1000;
    std::array<double, 2> e_star{0.7, 0.3};
    std::size_t resolution = 201;
    /// Directory read by the report command.
    std::string source;
    std::uint64_t seed = 0;

    std::filesystem::path out = "axebench-out";
    std::size_t jobs = 0;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are an error.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

/// Runs one command and writes its artifacts (plus run_config.json) under cfg.out.
/// Progress goes to `log`. Throws axebench::Error.
void run_command(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point: parses flags (env AXEBENCH_* < --config
/// file < flags), runs, and maps errors to "module: cause" on stderr with
/// exit code 2.
int cli_main(int argc, const char* const* argv);

}  // namespace axebench
