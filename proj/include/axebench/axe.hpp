#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "axebench/core.hpp"

namespace axebench {

struct AxeConfig {
    std::size_t n = 1;
    std::size_t k = 5;
    /// false: leave-one-out, the query row is never its own neighbour.
    bool include_self = false;

    void validate(std::size_t rows, std::size_t cols) const;
};

/// k-NN over a column subset of d's standardized features, voting on `targets`.
struct NeighborModel {
    std::vector<std::size_t> feature_subset;
    const Dataset* data = nullptr;
    std::span<const int> targets;

    NeighborModel(const Dataset& d, std::vector<std::size_t> subset, std::span<const int> targets);
};

/// Majority vote of the k nearest rows (Euclidean on the subset). Equal
/// distances keep ascending row index; a split vote returns 0. With
/// include_self false, `self_index` is excluded from the candidates.
int knn_predict(const NeighborModel& nm, std::span<const double> x, std::size_t k, bool include_self,
                std::optional<std::size_t> self_index);

struct AxeRow {
    std::size_t row = 0;
    std::vector<std::size_t> features;
    int y_hat = 0;
    int y = 0;
    double q = 0.0;
};

/// Per-row k-NN recovery of y_preds from each explanation's top-n features.
/// Explanation i is scored at row E[i].datapoint_index.
std::vector<AxeRow> axe_trace(const Dataset& d, std::span<const int> y_preds, const std::vector<Explanation>& E,
                              const AxeConfig& cfg, std::size_t jobs = 0);

/// Report form of axe_trace: per_point_q = 1[y_hat == y], aggregate = accuracy.
QualityReport axe_quality(const Dataset& d, std::span<const int> y_preds, const std::vector<Explanation>& E,
                          const AxeConfig& cfg, std::size_t jobs = 0);

/// q for a single row; equals the matching entry of axe_quality.
int axe_quality_single(const Dataset& d, std::span<const int> y_preds, const Explanation& e, std::size_t i,
                       const AxeConfig& cfg);

/// "row,features,y_hat,y,q" with features joined by ';'.
void write_axe_trace_csv(const std::filesystem::path& path, const std::vector<AxeRow>& rows);

}  // namespace axebench
