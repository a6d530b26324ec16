#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace axebench {

/// Error raised by every module. `module()` names the subsystem that failed so
/// the CLI can report "<module>: <cause>" on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

struct FeatureStats {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Tabular dataset. Rows are datapoints, columns are features.
///
/// `features` holds z-scored values used by every model, explainer and metric;
/// `raw` keeps the values as loaded so that re-standardization (e.g. after a
/// split) never compounds rounding error.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string id, std::size_t rows, std::size_t cols, std::vector<double> raw,
            std::vector<std::string> feature_names);

    const std::string& id() const { return id_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * cols_, cols_};
    }
    std::span<const double> raw_row(std::size_t i) const {
        return {raw_.data() + i * cols_, cols_};
    }
    double at(std::size_t i, std::size_t j) const { return features_[i * cols_ + j]; }

    const std::vector<double>& features() const { return features_; }
    const std::vector<double>& raw() const { return raw_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<FeatureStats>& standardization() const { return stats_; }

    const std::optional<std::vector<int>>& labels() const { return labels_; }
    const std::optional<std::size_t>& protected_index() const { return protected_index_; }
    const std::vector<std::size_t>& foil_indices() const { return foil_indices_; }
    const std::vector<std::string>& notes() const { return notes_; }

    std::optional<std::size_t> feature_index(const std::string& name) const;

    void set_id(std::string id) { id_ = std::move(id); }
    void set_labels(std::vector<int> labels);
    void set_protected_index(std::optional<std::size_t> index);
    void set_foil_indices(std::vector<std::size_t> indices);
    void add_note(std::string note) { notes_.push_back(std::move(note)); }

    /// Computes stats from the raw values of this dataset and z-scores them.
    /// Columns with zero spread get stddev 1 and a note.
    void standardize_in_place();
    /// Applies externally computed stats (e.g. from a training split).
    void apply_standardization(std::vector<FeatureStats> stats);

    /// New dataset holding the given rows, in order. Stats and metadata carry over.
    Dataset subset(std::span<const std::size_t> row_indices) const;

    /// Appends a column of raw values; the column is standardized with its own stats.
    std::size_t append_column(const std::string& name, std::span<const double> raw_values);

private:
    void check_indices() const;

    std::string id_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> raw_;
    std::vector<double> features_;
    std::vector<std::string> feature_names_;
    std::vector<FeatureStats> stats_;
    std::optional<std::vector<int>> labels_;
    std::optional<std::size_t> protected_index_;
    std::vector<std::size_t> foil_indices_;
    std::vector<std::string> notes_;
};

struct Explanation {
    std::vector<double> importances;
    std::size_t datapoint_index = 0;
    std::string explainer_tag;
    /// Non-empty when the producing explainer hit a degenerate case
    /// (e.g. the ridge floor dominated a surrogate fit).
    std::string diagnostics;
};

/// Binary classifier m: R^N -> {0,1}. Implementations must be deterministic
/// and safe to call concurrently.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual double predict_proba(std::span<const double> x) const = 0;
    virtual std::optional<std::vector<double>> gradient(std::span<const double> x) const {
        (void)x;
        return std::nullopt;
    }
    virtual std::string descriptor() const = 0;
    virtual std::size_t input_dim() const = 0;

    int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }
};

using PredictorPtr = std::shared_ptr<const Predictor>;

/// m(X) for every row of the dataset.
std::vector<int> predict_all(const Predictor& model, const Dataset& data);

struct QualityReport {
    std::string metric_name;
    std::map<std::string, std::string> hyperparams;
    /// Empty optional marks an undefined per-point value (only rank correlation
    /// produces these).
    std::vector<std::optional<double>> per_point_q;
    /// Mean of the defined per-point values; empty when none are defined.
    std::optional<double> aggregate_q;
    std::string dataset_id;
    std::string model_descriptor;
    std::string explainer_tag;

    std::size_t undefined_count() const;
};

QualityReport make_report(std::string metric_name, std::vector<std::optional<double>> per_point);
QualityReport make_report(std::string metric_name, const std::vector<double>& per_point);

double aggregate_quality(std::span<const double> per_point_q);

/// Indices of the n largest |importance| values, descending; equal magnitudes
/// keep ascending feature index.
std::vector<std::size_t> top_n_features(const Explanation& e, std::size_t n);
std::vector<std::size_t> top_n_features(std::span<const double> importances, std::size_t n);

/// The n least important features: the tail of the full top-n ordering,
/// least important first.
std::vector<std::size_t> bottom_n_features(std::span<const double> importances, std::size_t n);

/// Fractional ranks, rank 1 = largest |importance|; ties share the mean rank.
std::vector<double> rank_vector(const Explanation& e);
std::vector<double> rank_vector(std::span<const double> importances);

}  // namespace axebench
