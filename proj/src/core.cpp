#include "axebench/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace axebench {

namespace {

Error core_error(const std::string& what) { return Error("core", what); }

std::vector<FeatureStats> column_stats(const std::vector<double>& raw, std::size_t rows,
                                       std::size_t cols) {
    std::vector<FeatureStats> stats(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < rows; ++i) mean += raw[i * cols + j];
        mean /= static_cast<double>(rows);
        double var = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = raw[i * cols + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(rows);
        stats[j] = {mean, std::sqrt(var)};
    }
    return stats;
}

}  // namespace

Dataset::Dataset(std::string id, std::size_t rows, std::size_t cols, std::vector<double> raw,
                 std::vector<std::string> feature_names)
    : id_(std::move(id)),
      rows_(rows),
      cols_(cols),
      raw_(std::move(raw)),
      feature_names_(std::move(feature_names)) {
    if (rows_ == 0 || cols_ == 0) throw core_error("dataset must have at least one row and one column");
    if (raw_.size() != rows_ * cols_) throw core_error("feature matrix size does not match shape");
    if (feature_names_.size() != cols_) throw core_error("feature name count does not match column count");
    for (double v : raw_)
        if (!std::isfinite(v)) throw core_error("non-finite feature value");
    features_ = raw_;
    stats_.assign(cols_, FeatureStats{});
}

std::optional<std::size_t> Dataset::feature_index(const std::string& name) const {
    auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names_.begin());
}

void Dataset::set_labels(std::vector<int> labels) {
    if (labels.size() != rows_) throw core_error("label count does not match row count");
    for (int y : labels)
        if (y != 0 && y != 1) throw core_error("labels must be 0 or 1");
    labels_ = std::move(labels);
}

void Dataset::set_protected_index(std::optional<std::size_t> index) {
    protected_index_ = index;
    check_indices();
}

void Dataset::set_foil_indices(std::vector<std::size_t> indices) {
    foil_indices_ = std::move(indices);
    check_indices();
}

void Dataset::check_indices() const {
    std::set<std::size_t> seen;
    auto check = [&](std::size_t idx) {
        if (idx >= cols_) throw core_error("feature index out of range");
        if (!seen.insert(idx).second) throw core_error("protected and foil indices must be distinct");
    };
    if (protected_index_) check(*protected_index_);
    for (std::size_t f : foil_indices_) check(f);
}

void Dataset::standardize_in_place() {
    auto stats = column_stats(raw_, rows_, cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
        if (!(stats[j].stddev > 0.0)) {
            stats[j].stddev = 1.0;
            notes_.push_back("zero spread in column '" + feature_names_[j] + "'; stddev set to 1");
        }
    }
    apply_standardization(std::move(stats));
}

void Dataset::apply_standardization(std::vector<FeatureStats> stats) {
    if (stats.size() != cols_) throw core_error("standardization size does not match column count");
    for (const auto& s : stats)
        if (!(s.stddev > 0.0) || !std::isfinite(s.mean)) throw core_error("stddev must be positive");
    stats_ = std::move(stats);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            features_[i * cols_ + j] = (raw_[i * cols_ + j] - stats_[j].mean) / stats_[j].stddev;
}

Dataset Dataset::subset(std::span<const std::size_t> row_indices) const {
    if (row_indices.empty()) throw core_error("subset must keep at least one row");
    Dataset out = *this;
    out.rows_ = row_indices.size();
    out.raw_.assign(out.rows_ * cols_, 0.0);
    out.features_.assign(out.rows_ * cols_, 0.0);
    std::vector<int> labels;
    for (std::size_t r = 0; r < row_indices.size(); ++r) {
        const std::size_t src = row_indices[r];
        if (src >= rows_) throw core_error("row index out of range");
        std::copy_n(raw_.begin() + static_cast<std::ptrdiff_t>(src * cols_), cols_,
                    out.raw_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
        std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(src * cols_), cols_,
                    out.features_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
        if (labels_) labels.push_back((*labels_)[src]);
    }
    if (labels_) out.labels_ = std::move(labels);
    return out;
}

std::size_t Dataset::append_column(const std::string& name, std::span<const double> raw_values) {
    if (raw_values.size() != rows_) throw core_error("appended column has wrong length");
    std::vector<double> raw;
    raw.reserve(rows_ * (cols_ + 1));
    for (std::size_t i = 0; i < rows_; ++i) {
        raw.insert(raw.end(), raw_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                   raw_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
        if (!std::isfinite(raw_values[i])) throw core_error("non-finite feature value");
        raw.push_back(raw_values[i]);
    }
    auto stats = stats_;
    std::vector<double> column(raw_values.begin(), raw_values.end());
    auto s = column_stats(column, rows_, 1).front();
    if (!(s.stddev > 0.0)) s.stddev = 1.0;
    stats.push_back(s);
    raw_ = std::move(raw);
    ++cols_;
    features_.assign(raw_.size(), 0.0);
    feature_names_.push_back(name);
    apply_standardization(std::move(stats));
    return cols_ - 1;
}

std::vector<int> predict_all(const Predictor& model, const Dataset& data) {
    std::vector<int> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) out[i] = model.predict(data.row(i));
    return out;
}

std::size_t QualityReport::undefined_count() const {
    return static_cast<std::size_t>(
        std::count_if(per_point_q.begin(), per_point_q.end(), [](const auto& q) { return !q; }));
}

QualityReport make_report(std::string metric_name, std::vector<std::optional<double>> per_point) {
    QualityReport r;
    r.metric_name = std::move(metric_name);
    std::vector<double> defined;
    for (const auto& q : per_point)
        if (q) defined.push_back(*q);
    if (!defined.empty()) r.aggregate_q = aggregate_quality(defined);
    r.per_point_q = std::move(per_point);
    return r;
}

QualityReport make_report(std::string metric_name, const std::vector<double>& per_point) {
    return make_report(std::move(metric_name),
                       std::vector<std::optional<double>>(per_point.begin(), per_point.end()));
}

double aggregate_quality(std::span<const double> per_point_q) {
    if (per_point_q.empty()) throw core_error("empty quality list");
    double sum = 0.0;
    for (double q : per_point_q) {
        if (!std::isfinite(q)) throw core_error("non-finite quality value");
        sum += q;
    }
    return sum / static_cast<double>(per_point_q.size());
}

std::vector<std::size_t> top_n_features(std::span<const double> importances, std::size_t n) {
    if (n > importances.size()) throw core_error("n exceeds feature count");
    std::vector<std::size_t> order(importances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(importances[a]) > std::abs(importances[b]);
    });
    order.resize(n);
    return order;
}

std::vector<std::size_t> top_n_features(const Explanation& e, std::size_t n) {
    return top_n_features(e.importances, n);
}

std::vector<std::size_t> bottom_n_features(std::span<const double> importances, std::size_t n) {
    if (n > importances.size()) throw core_error("n exceeds feature count");
    auto order = top_n_features(importances, importances.size());
    return {order.rbegin(), order.rbegin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<double> rank_vector(std::span<const double> importances) {
    const auto order = top_n_features(importances, importances.size());
    std::vector<double> ranks(importances.size());
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        const double mag = std::abs(importances[order[start]]);
        while (end < order.size() && std::abs(importances[order[end]]) == mag) ++end;
        // positions start..end-1 are 1-based ranks start+1..end
        const double mean_rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t p = start; p < end; ++p) ranks[order[p]] = mean_rank;
        start = end;
    }
    return ranks;
}

std::vector<double> rank_vector(const Explanation& e) { return rank_vector(e.importances); }

}  // namespace axebench
