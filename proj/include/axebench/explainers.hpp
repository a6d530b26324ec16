#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "axebench/core.hpp"

namespace axebench {

enum class ExplainerKind { Gradient, IntegratedGradients, LocalSurrogate, KernelShapley, Manual };

std::string to_string(ExplainerKind kind);
ExplainerKind parse_explainer_kind(const std::string& name);

struct ExplainerConfig {
    ExplainerKind kind = ExplainerKind::Gradient;
    /// Perturbation samples (local surrogate) or coalition samples (kernel Shapley).
    std::size_t samples = 1000;
    /// Gaussian std of local-surrogate perturbations, standardized units.
    double sigma_perturb = 0.5;
    /// Exponential kernel width; <= 0 selects 0.75 * sqrt(N).
    double kernel_width = 0.0;
    /// Ridge floor on the surrogate / Shapley regressions.
    double ridge = 1e-6;
    /// Integrated-gradients baseline; empty selects the zero vector (the
    /// standardized feature mean).
    std::vector<double> baseline;
    std::size_t ig_steps = 64;
    /// Background rows for kernel Shapley masking.
    std::size_t background_rows = 100;
    std::uint64_t seed = 0;

    void validate(std::size_t feature_count) const;
};

/// e = gradient of predict_proba at x.
Explanation explain_gradient(const Predictor& m, std::span<const double> x, std::size_t row = 0);

/// Midpoint Riemann sum of the gradient along the straight path from the baseline.
Explanation explain_integrated_gradients(const Predictor& m, std::span<const double> x, const ExplainerConfig& cfg,
                                         std::size_t row = 0);

/// Weighted ridge fit of predict_proba on Gaussian perturbations around x.
/// The row index selects the random stream, so each row is reproducible alone.
Explanation explain_local_surrogate(const Predictor& m, std::span<const double> x, const Dataset& d,
                                    const ExplainerConfig& cfg, std::size_t row = 0);

/// Kernel-weighted least squares over feature coalitions with absent features
/// filled from background rows; the efficiency constraint is imposed exactly.
/// When 2^N - 2 <= samples every coalition is enumerated.
Explanation explain_kernel_shapley(const Predictor& m, std::span<const double> x, const Dataset& d,
                                   const ExplainerConfig& cfg, std::size_t row = 0);

/// One-hot explanation at `important_index` for every row of d.
std::vector<Explanation> make_manual_explanations(const Dataset& d, std::size_t important_index);

/// Explains every row of d with the configured explainer (rows run in parallel;
/// output is in row order).
std::vector<Explanation> explain_dataset(const Predictor& m, const Dataset& d, const ExplainerConfig& cfg,
                                         std::size_t jobs = 0);

// Serialization: CSV is "row,<feature names...>" then one line per explanation.
void write_explanations_csv(const std::filesystem::path& path, const std::vector<Explanation>& explanations,
                            const std::vector<std::string>& feature_names);
std::vector<Explanation> read_explanations_csv(const std::filesystem::path& path, const std::string& tag = "file");
nlohmann::json explanations_to_json(const std::vector<Explanation>& explanations);
std::vector<Explanation> explanations_from_json(const nlohmann::json& j);

}  // namespace axebench
