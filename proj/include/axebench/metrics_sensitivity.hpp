#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "axebench/core.hpp"

namespace axebench {

struct PerturbConfig {
    std::size_t n = 1;
    std::size_t num_perturbations = 100;
    /// Std of the Gaussian noise added to the chosen features, standardized units.
    double sigma = 0.5;
    std::uint64_t seed = 0;
    /// Return -PGU so that larger is better for every metric.
    bool negate_pgu = false;

    void validate(std::size_t feature_count) const;
};

/// Mean |proba(x') - proba(x)| where x' adds N(0, sigma^2) noise to `features` only.
/// The noise on feature f in perturbation j is normal_at(key(seed, row), j * N + f),
/// so two feature sets evaluated at the same row see the same noise on every
/// shared feature.
double perturbation_gap(const Predictor& m, std::span<const double> x, std::span<const std::size_t> features,
                        const PerturbConfig& cfg, std::size_t row);

/// Prediction gap on the top-n features of e.
double pgi(const Predictor& m, std::span<const double> x, std::span<const double> e, const PerturbConfig& cfg,
           std::size_t row = 0);
/// Prediction gap on the bottom-n features of e; negated when cfg.negate_pgu.
double pgu(const Predictor& m, std::span<const double> x, std::span<const double> e, const PerturbConfig& cfg,
           std::size_t row = 0);

/// Per-row reports over a dataset; explanation i is paired with row
/// E[i].datapoint_index.
QualityReport pgi_report(const Predictor& m, const Dataset& d, const std::vector<Explanation>& E,
                         const PerturbConfig& cfg, std::size_t jobs = 0);
QualityReport pgu_report(const Predictor& m, const Dataset& d, const std::vector<Explanation>& E,
                         const PerturbConfig& cfg, std::size_t jobs = 0);

}  // namespace axebench
