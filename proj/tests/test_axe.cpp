#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "axebench/axe.hpp"
#include "axebench/data.hpp"
#include "axebench/explainers.hpp"
#include "axebench/support.hpp"
#include "oracles.hpp"

using namespace axebench;

namespace {

std::vector<Explanation> one_hot(const Dataset& d, std::size_t f) { return make_manual_explanations(d, f); }

std::vector<std::vector<double>> importances(const std::vector<Explanation>& E) {
    std::vector<std::vector<double>> out;
    for (const auto& e : E) out.push_back(e.importances);
    return out;
}

// Rows on a lattice so that exact distance ties are everywhere.
Dataset lattice(Rng& rng, std::size_t rows, std::size_t cols) {
    std::vector<double> raw(rows * cols);
    for (auto& v : raw) v = static_cast<double>(uniform_index(rng, 3));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cols; ++j) names.push_back("f" + std::to_string(j));
    Dataset d("lattice", rows, cols, raw, names);
    d.standardize_in_place();
    return d;
}

}  // namespace

TEST(Knn, SelfMatchWhenIncluded) {
    const auto d = generate_synthetic({30, 2, 1, GeneratorKind::ThresholdRule, {}});
    std::vector<int> y(30, 0);
    y[4] = 1;
    const NeighborModel nm(d, {0, 1}, y);
    EXPECT_EQ(knn_predict(nm, d.row(4), 1, true, 4), 1);
    EXPECT_EQ(knn_predict(nm, d.row(4), 1, false, 4), 0);
}

TEST(Knn, TiesKeepLowerRowAndSplitVoteIsZero) {
    // Four rows at equal distance from the query at 0.
    Dataset d("t", 5, 1, {0, 1, -1, 1, -1}, {"x"});
    const std::vector<int> y{0, 1, 0, 0, 1};
    const NeighborModel nm(d, {0}, y);
    const std::vector<double> q{d.at(0, 0)};
    EXPECT_EQ(knn_predict(nm, q, 1, false, 0), 1);  // row 1 wins the tie
    EXPECT_EQ(knn_predict(nm, q, 2, false, 0), 0);  // rows 1, 2: one vote each
    EXPECT_EQ(knn_predict(nm, q, 3, false, 0), 0);  // rows 1, 2, 3
}

TEST(Knn, WellSeparatedClusters) {
    Dataset d("c", 8, 1, {-5, -4.5, -4, -4.2, 4, 4.5, 5, 4.2}, {"x"});
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    const NeighborModel nm(d, {0}, y);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(knn_predict(nm, d.row(i), 3, false, i), y[i]);
}

TEST(Knn, KExceedingCandidatesIsAnError) {
    Dataset d("t", 3, 1, {0, 1, 2}, {"x"});
    const std::vector<int> y{0, 1, 0};
    const NeighborModel nm(d, {0}, y);
    try {
        knn_predict(nm, d.row(0), 3, false, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.module(), "axe");
        EXPECT_NE(std::string(e.what()).find("k exceeds candidate count"), std::string::npos);
    }
    EXPECT_NO_THROW(knn_predict(nm, d.row(0), 3, true, 0));
}

TEST(Axe, GenerativeFeatureScoresHigh) {
    const auto d = generate_synthetic({500, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto& y = *d.labels();
    const auto r = axe_quality(d, y, one_hot(d, 0), {1, 5, false});
    EXPECT_GE(*r.aggregate_q, 0.98);
    EXPECT_EQ(r.hyperparams.at("mode"), "leave-one-out");
}

TEST(Axe, NoiseFeatureScoresChance) {
    const auto d = generate_synthetic({400, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto r = axe_quality(d, *d.labels(), one_hot(d, 2), {1, 5, false});
    EXPECT_NEAR(*r.aggregate_q, 0.5, 0.08);
}

TEST(Axe, LeaveOneOutAvoidsDegenerateSelfMatch) {
    const auto d = generate_synthetic({200, 3, 4, GeneratorKind::ThresholdRule, {}});
    const auto E = one_hot(d, 2);
    const auto with_self = axe_quality(d, *d.labels(), E, {1, 1, true});
    const auto loo = axe_quality(d, *d.labels(), E, {1, 1, false});
    EXPECT_EQ(*with_self.aggregate_q, 1.0);
    EXPECT_LT(*loo.aggregate_q, 1.0);
}

TEST(Axe, PerPointIsIndicator) {
    const auto d = generate_synthetic({60, 3, 2, GeneratorKind::ThresholdRule, {}});
    std::vector<int> y(*d.labels());
    const auto trace = axe_trace(d, y, one_hot(d, 1), {1, 3, false});
    for (const auto& row : trace) EXPECT_EQ(row.q, row.y_hat == row.y ? 1.0 : 0.0);
}

TEST(Axe, OracleEquivalenceOnTieHeavyData) {
    Rng rng(99);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t rows = 4 + uniform_index(rng, 30), cols = 1 + uniform_index(rng, 4);
        const auto d = lattice(rng, rows, cols);
        std::vector<int> y(rows);
        for (auto& v : y) v = static_cast<int>(uniform_index(rng, 2));
        std::vector<Explanation> E(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            E[i].datapoint_index = i;
            for (std::size_t j = 0; j < cols; ++j)
                E[i].importances.push_back(static_cast<double>(uniform_index(rng, 3)) - 1.0);
        }
        const std::size_t n = 1 + uniform_index(rng, cols);
        const bool self = uniform_index(rng, 2) == 1;
        const std::size_t k = 1 + uniform_index(rng, std::min<std::size_t>(rows - 1, 7));
        std::vector<double> expected;
        const double agg = oracle::axe(d, y, importances(E), n, k, self, &expected);
        const auto r = axe_quality(d, y, E, {n, k, self}, 1 + uniform_index(rng, 3));
        ASSERT_EQ(r.per_point_q.size(), rows);
        for (std::size_t i = 0; i < rows; ++i) {
            EXPECT_EQ(*r.per_point_q[i], expected[i]);
            EXPECT_EQ(axe_quality_single(d, y, E[i], i, {n, k, self}), static_cast<int>(expected[i]));
        }
        EXPECT_DOUBLE_EQ(*r.aggregate_q, agg);
    }
}

TEST(Axe, ExplanationsMayArriveInAnyOrder) {
    const auto d = generate_synthetic({40, 3, 2, GeneratorKind::ThresholdRule, {}});
    auto E = one_hot(d, 0);
    std::reverse(E.begin(), E.end());
    const auto trace = axe_trace(d, *d.labels(), E, {1, 3, false});
    EXPECT_EQ(trace.front().row, 39u);
    const auto forward = axe_trace(d, *d.labels(), one_hot(d, 0), {1, 3, false});
    EXPECT_EQ(trace.front().q, forward.back().q);
}

TEST(Axe, Errors) {
    const auto d = generate_synthetic({20, 3, 2, GeneratorKind::ThresholdRule, {}});
    const auto E = one_hot(d, 0);
    EXPECT_THROW(axe_quality(d, *d.labels(), E, {0, 5, false}), Error);
    EXPECT_THROW(axe_quality(d, *d.labels(), E, {4, 5, false}), Error);
    EXPECT_THROW(axe_quality(d, *d.labels(), E, {1, 20, false}), Error);
    EXPECT_NO_THROW(axe_quality(d, *d.labels(), E, {1, 20, true}));
    const std::vector<int> short_y(10, 0);
    EXPECT_THROW(axe_quality(d, short_y, E, {1, 5, false}), Error);
    std::vector<Explanation> too_many = E;
    too_many.push_back(E.front());
    EXPECT_THROW(axe_quality(d, *d.labels(), too_many, {1, 5, false}), Error);
}

TEST(Axe, TraceCsv) {
    const auto d = generate_synthetic({10, 2, 2, GeneratorKind::ThresholdRule, {}});
    const auto trace = axe_trace(d, *d.labels(), one_hot(d, 1), {1, 3, false});
    const auto path = std::filesystem::temp_directory_path() / "axebench_trace.csv";
    write_axe_trace_csv(path, trace);
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "row,features,y_hat,y,q");
    EXPECT_EQ(first.substr(0, 4), "0,1,");
    std::filesystem::remove(path);
}
