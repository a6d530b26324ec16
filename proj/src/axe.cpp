#include "axebench/axe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "axebench/support.hpp"

namespace axebench {

namespace {

Error axe_error(const std::string& what) { return Error("axe", what); }

void check_inputs(const Dataset& d, std::span<const int> y_preds, std::size_t explanations) {
    if (y_preds.size() != d.rows())
        throw axe_error("length mismatch: " + std::to_string(y_preds.size()) + " predictions for " +
                        std::to_string(d.rows()) + " rows");
    if (explanations != d.rows())
        throw axe_error("length mismatch: " + std::to_string(explanations) + " explanations for " +
                        std::to_string(d.rows()) + " rows");
}

/// One column's rows grouped by distinct value. Answers single-feature k-NN
/// queries with the same (distance, row) ordering as the brute-force scan.
class ColumnIndex {
public:
    ColumnIndex(const Dataset& d, std::size_t feature) {
        std::vector<std::pair<double, std::size_t>> entries(d.rows());
        for (std::size_t r = 0; r < d.rows(); ++r) entries[r] = {d.at(r, feature), r};
        std::sort(entries.begin(), entries.end());
        for (const auto& [v, r] : entries) {
            if (values_.empty() || values_.back() != v) {
                values_.push_back(v);
                members_.emplace_back();
            }
            members_.back().push_back(r);
        }
    }

    int predict(double v, std::span<const int> targets, std::size_t k, std::optional<std::size_t> skip) const {
        const auto pos = static_cast<std::ptrdiff_t>(std::lower_bound(values_.begin(), values_.end(), v) - values_.begin());
        std::ptrdiff_t left = pos - 1, right = pos;
        const auto size = static_cast<std::ptrdiff_t>(values_.size());
        auto dist = [&](std::ptrdiff_t g) {
            const double diff = values_[static_cast<std::size_t>(g)] - v;
            return diff * diff;
        };
        std::size_t needed = k, ones = 0;
        std::vector<std::size_t> level_rows;
        while (needed > 0 && (left >= 0 || right < size)) {
            double level = std::numeric_limits<double>::infinity();
            if (left >= 0) level = dist(left);
            if (right < size) level = std::min(level, dist(right));
            level_rows.clear();
            auto take = [&](std::ptrdiff_t g) {
                std::size_t taken = 0;
                for (std::size_t r : members_[static_cast<std::size_t>(g)]) {
                    if (skip && r == *skip) continue;
                    level_rows.push_back(r);
                    if (++taken == needed) break;
                }
            };
            while (left >= 0 && dist(left) == level) take(left--);
            while (right < size && dist(right) == level) take(right++);
            std::sort(level_rows.begin(), level_rows.end());
            const std::size_t use = std::min(needed, level_rows.size());
            for (std::size_t j = 0; j < use; ++j) ones += targets[level_rows[j]] == 1 ? 1 : 0;
            needed -= use;
        }
        return 2 * ones > k ? 1 : 0;
    }

private:
    std::vector<double> values_;
    std::vector<std::vector<std::size_t>> members_;
};

AxeRow score_row(const Dataset& d, std::span<const int> y_preds, const Explanation& e, const AxeConfig& cfg) {
    if (e.importances.size() != d.cols()) throw axe_error("length mismatch: explanation width differs from dataset");
    const std::size_t i = e.datapoint_index;
    if (i >= d.rows()) throw axe_error("explanation row " + std::to_string(i) + " out of range");
    AxeRow out;
    out.row = i;
    out.features = top_n_features(e, cfg.n);
    const NeighborModel nm(d, out.features, y_preds);
    out.y_hat = knn_predict(nm, d.row(i), cfg.k, cfg.include_self, i);
    out.y = y_preds[i];
    out.q = out.y_hat == out.y ? 1.0 : 0.0;
    return out;
}

}  // namespace

void AxeConfig::validate(std::size_t rows, std::size_t cols) const {
    if (n < 1 || n > cols) throw axe_error("n out of range: need 1 <= n <= " + std::to_string(cols));
    const std::size_t candidates = include_self ? rows : rows - 1;
    if (k < 1 || k > candidates) throw axe_error("k out of range: need 1 <= k <= " + std::to_string(candidates));
}

NeighborModel::NeighborModel(const Dataset& d, std::vector<std::size_t> subset, std::span<const int> t)
    : feature_subset(std::move(subset)), data(&d), targets(t) {
    if (targets.size() != d.rows()) throw axe_error("length mismatch: targets differ from row count");
    auto sorted = feature_subset;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw axe_error("feature subset has duplicates");
    if (!sorted.empty() && sorted.back() >= d.cols()) throw axe_error("feature subset index out of range");
}

int knn_predict(const NeighborModel& nm, std::span<const double> x, std::size_t k, bool include_self,
                std::optional<std::size_t> self_index) {
    const Dataset& d = *nm.data;
    const bool skip = !include_self && self_index.has_value();
    const std::size_t candidates = d.rows() - (skip && *self_index < d.rows() ? 1 : 0);
    if (k == 0) throw axe_error("k must be at least 1");
    if (k > candidates) throw axe_error("k exceeds candidate count");

    // Max-heap on (distance, row) holding the k best so far. Rows arrive in
    // ascending order, so an equal distance never displaces an earlier row.
    using Entry = std::pair<double, std::size_t>;
    std::vector<Entry> heap;
    heap.reserve(k);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (skip && r == *self_index) continue;
        const auto row = d.row(r);
        double dist = 0.0;
        for (std::size_t f : nm.feature_subset) {
            const double diff = row[f] - x[f];
            dist += diff * diff;
        }
        if (heap.size() < k) {
            heap.emplace_back(dist, r);
            std::push_heap(heap.begin(), heap.end());
        } else if (Entry{dist, r} < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = {dist, r};
            std::push_heap(heap.begin(), heap.end());
        }
    }
    std::size_t ones = 0;
    for (const auto& [dist, r] : heap) ones += nm.targets[r] == 1 ? 1 : 0;
    return 2 * ones > k ? 1 : 0;
}

std::vector<AxeRow> axe_trace(const Dataset& d, std::span<const int> y_preds, const std::vector<Explanation>& E,
                              const AxeConfig& cfg, std::size_t jobs) {
    check_inputs(d, y_preds, E.size());
    cfg.validate(d.rows(), d.cols());
    std::vector<AxeRow> rows(E.size());
    if (cfg.n != 1) {
        parallel_for(E.size(), [&](std::size_t i) { rows[i] = score_row(d, y_preds, E[i], cfg); }, jobs);
        return rows;
    }
    // n = 1: every neighbour search is one-dimensional, so index each used column once.
    std::map<std::size_t, std::unique_ptr<ColumnIndex>> columns;
    for (const auto& e : E) {
        if (e.importances.size() != d.cols()) throw axe_error("length mismatch: explanation width differs from dataset");
        const std::size_t f = top_n_features(e, 1).front();
        if (!columns.count(f)) columns.emplace(f, std::make_unique<ColumnIndex>(d, f));
    }
    parallel_for(
        E.size(),
        [&](std::size_t i) {
            const std::size_t row = E[i].datapoint_index;
            if (row >= d.rows()) throw axe_error("explanation row " + std::to_string(row) + " out of range");
            AxeRow& out = rows[i];
            out.row = row;
            out.features = top_n_features(E[i], 1);
            const auto skip = cfg.include_self ? std::nullopt : std::optional<std::size_t>(row);
            out.y_hat = columns.at(out.features.front())->predict(d.at(row, out.features.front()), y_preds, cfg.k, skip);
            out.y = y_preds[row];
            out.q = out.y_hat == out.y ? 1.0 : 0.0;
        },
        jobs);
    return rows;
}

QualityReport axe_quality(const Dataset& d, std::span<const int> y_preds, const std::vector<Explanation>& E,
                          const AxeConfig& cfg, std::size_t jobs) {
    const auto rows = axe_trace(d, y_preds, E, cfg, jobs);
    std::vector<double> q(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) q[i] = rows[i].q;
    auto r = make_report("axe", q);
    r.hyperparams["n"] = std::to_string(cfg.n);
    r.hyperparams["k"] = std::to_string(cfg.k);
    r.hyperparams["mode"] = cfg.include_self ? "include-self" : "leave-one-out";
    r.hyperparams["distance"] = "euclidean-standardized";
    r.dataset_id = d.id();
    if (!E.empty()) r.explainer_tag = E.front().explainer_tag;
    return r;
}

int axe_quality_single(const Dataset& d, std::span<const int> y_preds, const Explanation& e, std::size_t i,
                       const AxeConfig& cfg) {
    if (y_preds.size() != d.rows()) throw axe_error("length mismatch: predictions differ from row count");
    if (i >= d.rows()) throw axe_error("row index out of range");
    cfg.validate(d.rows(), d.cols());
    Explanation at = e;
    at.datapoint_index = i;
    return static_cast<int>(score_row(d, y_preds, at, cfg).q);
}

void write_axe_trace_csv(const std::filesystem::path& path, const std::vector<AxeRow>& rows) {
    std::ofstream out(path);
    if (!out) throw axe_error("cannot write " + path.string());
    out << "row,features,y_hat,y,q\n";
    for (const auto& r : rows) {
        out << r.row << ',';
        for (std::size_t j = 0; j < r.features.size(); ++j) out << (j ? ";" : "") << r.features[j];
        out << ',' << r.y_hat << ',' << r.y << ',' << r.q << '\n';
    }
}

}  // namespace axebench
