#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "axebench/data.hpp"
#include "axebench/explainers.hpp"
#include "axebench/models.hpp"
#include "oracles.hpp"

using namespace axebench;

namespace {

// proba = 0.5 + sum_j a_j tanh(x_j), kept inside (0, 1) by the weights.
class AdditivePredictor final : public Predictor {
public:
    explicit AdditivePredictor(std::vector<double> a) : a_(std::move(a)) {}
    double predict_proba(std::span<const double> x) const override {
        double s = 0.5;
        for (std::size_t j = 0; j < a_.size(); ++j) s += a_[j] * std::tanh(x[j]);
        return s;
    }
    std::string descriptor() const override { return "additive"; }
    std::size_t input_dim() const override { return a_.size(); }

private:
    std::vector<double> a_;
};

// Linear in x with no squashing, for the surrogate slope check.
class LinearProba final : public Predictor {
public:
    explicit LinearProba(std::vector<double> b) : b_(std::move(b)) {}
    double predict_proba(std::span<const double> x) const override {
        return 0.5 + std::inner_product(b_.begin(), b_.end(), x.begin(), 0.0);
    }
    std::string descriptor() const override { return "linear-proba"; }
    std::size_t input_dim() const override { return b_.size(); }

private:
    std::vector<double> b_;
};

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(std::size_t n) : n_(n) {}
    double predict_proba(std::span<const double>) const override { return 0.3; }
    std::optional<std::vector<double>> gradient(std::span<const double>) const override {
        return std::vector<double>(n_, 0.0);
    }
    std::string descriptor() const override { return "constant"; }
    std::size_t input_dim() const override { return n_; }

private:
    std::size_t n_;
};

std::vector<std::vector<double>> all_rows(const Dataset& d) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.rows(); ++i) rows.emplace_back(d.row(i).begin(), d.row(i).end());
    return rows;
}

}  // namespace

TEST(Gradient, ConstantModelGivesZeros) {
    const ConstantPredictor m(3);
    const auto e = explain_gradient(m, std::vector<double>{1, 2, 3});
    EXPECT_EQ(e.importances, (std::vector<double>{0, 0, 0}));
}

TEST(Gradient, RuleModelIsAnError) {
    const auto m = make_rule_predictor({0, 0.0, true}, 2);
    try {
        explain_gradient(*m, std::vector<double>{1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.module(), "explainers");
        EXPECT_NE(std::string(e.what()).find("gradient not supported"), std::string::npos);
    }
}

TEST(IntegratedGradients, CompletenessAt256Steps) {
    const auto d = generate_synthetic({200, 4, 2, GeneratorKind::GaussianBlobs, {}});
    MlpSpec spec;
    spec.hidden_sizes = {8};
    spec.epochs = 200;
    const auto m = train_mlp(d, spec);
    ExplainerConfig cfg;
    cfg.ig_steps = 256;
    for (std::size_t i = 0; i < 20; ++i) {
        const auto e = explain_integrated_gradients(*m, d.row(i), cfg, i);
        const double sum = std::accumulate(e.importances.begin(), e.importances.end(), 0.0);
        const double target = m->predict_proba(d.row(i)) - m->predict_proba(std::vector<double>(4, 0.0));
        EXPECT_NEAR(sum, target, 1e-3);
    }
}

TEST(IntegratedGradients, AtBaselineIsZero) {
    const auto m = make_linear_predictor({{1.0, -1.0}, 0.0}, 2);
    ExplainerConfig cfg;
    cfg.baseline = {0.5, 0.5};
    const auto e = explain_integrated_gradients(*m, std::vector<double>{0.5, 0.5}, cfg);
    EXPECT_EQ(e.importances, (std::vector<double>{0, 0}));
}

TEST(LocalSurrogate, RecoversLinearSlopes) {
    const auto d = generate_synthetic({50, 3, 1, GeneratorKind::ThresholdRule, {}});
    const std::vector<double> beta{0.08, -0.05, 0.02};
    const LinearProba m(beta);
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::LocalSurrogate;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto e = explain_local_surrogate(m, d.row(i), d, cfg, i);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(e.importances[j], beta[j], 0.05 * std::abs(beta[j]));
        EXPECT_TRUE(e.diagnostics.empty());
    }
}

TEST(LocalSurrogate, VanishingPerturbationsAreFlagged) {
    const auto d = generate_synthetic({50, 3, 1, GeneratorKind::ThresholdRule, {}});
    const LinearProba m({0.08, -0.05, 0.02});
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::LocalSurrogate;
    cfg.sigma_perturb = 1e-9;
    const auto e = explain_local_surrogate(m, d.row(0), d, cfg);
    EXPECT_FALSE(e.diagnostics.empty());
    for (double v : e.importances) EXPECT_LT(std::abs(v), 1e-3);
}

TEST(LocalSurrogate, SameSeedSameExplanation) {
    const auto d = generate_synthetic({50, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto m = make_linear_predictor({{1.0, 0.5, 0.0}, 0.0}, 3);
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::LocalSurrogate;
    cfg.seed = 9;
    EXPECT_EQ(explain_local_surrogate(*m, d.row(3), d, cfg, 3).importances,
              explain_local_surrogate(*m, d.row(3), d, cfg, 3).importances);
}

TEST(KernelShapley, MatchesExhaustiveShapleyOnAdditiveModels) {
    for (std::size_t p = 2; p <= 8; ++p) {
        const auto d = generate_synthetic({40, p, p, GeneratorKind::ThresholdRule, {}});
        std::vector<double> a(p);
        for (std::size_t j = 0; j < p; ++j) a[j] = (j % 2 ? -0.3 : 0.4) / static_cast<double>(p);
        const AdditivePredictor m(a);
        const auto background = all_rows(d);
        for (std::size_t samples : {std::size_t{1000}, std::size_t{4 * p}}) {
            ExplainerConfig cfg;
            cfg.kind = ExplainerKind::KernelShapley;
            cfg.samples = samples;
            for (std::size_t i = 0; i < 3; ++i) {
                const auto e = explain_kernel_shapley(m, d.row(i), d, cfg, i);
                const auto exact = oracle::exact_shapley(m, d.row(i), background);
                for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(e.importances[j], exact[j], 0.05);
            }
        }
    }
}

TEST(KernelShapley, UnusedFeatureGetsNoCredit) {
    const auto d = generate_synthetic({60, 4, 3, GeneratorKind::ThresholdRule, {}});
    const auto m = make_rule_predictor({0, 0.0, true}, 4);
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::KernelShapley;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto e = explain_kernel_shapley(*m, d.row(i), d, cfg, i);
        for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(e.importances[j], 0.0, 0.02);
    }
}

TEST(KernelShapley, EfficiencyHoldsWhenSampling) {
    const auto d = generate_synthetic({80, 10, 3, GeneratorKind::ThresholdRule, {}});
    const auto m = make_linear_predictor({{1.0, 0.5, -0.5, 0.2, 0, 0, 0.1, 0, 0, 0.3}, 0.1}, 10);
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::KernelShapley;
    cfg.samples = 300;
    const auto e = explain_kernel_shapley(*m, d.row(0), d, cfg);
    double base = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) base += m->predict_proba(d.row(i)) / static_cast<double>(d.rows());
    EXPECT_NEAR(std::accumulate(e.importances.begin(), e.importances.end(), 0.0), m->predict_proba(d.row(0)) - base,
                1e-9);
}

TEST(Manual, OneHotAtIndex) {
    const auto d = generate_synthetic({5, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto E = make_manual_explanations(d, 2);
    ASSERT_EQ(E.size(), 5u);
    for (const auto& e : E) EXPECT_EQ(e.importances, (std::vector<double>{0, 0, 1}));
    EXPECT_THROW(make_manual_explanations(d, 3), Error);
}

TEST(Dataset, ExplainDatasetIndependentOfJobs) {
    const auto d = generate_synthetic({30, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto m = make_linear_predictor({{1.0, 0.5, 0.0}, 0.0}, 3);
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::LocalSurrogate;
    cfg.samples = 200;
    const auto a = explain_dataset(*m, d, cfg, 1), b = explain_dataset(*m, d, cfg, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].importances, b[i].importances);
        EXPECT_EQ(a[i].datapoint_index, i);
    }
}

TEST(Serialization, CsvAndJsonRoundTrip) {
    const auto d = generate_synthetic({6, 2, 1, GeneratorKind::ThresholdRule, {}});
    const auto m = make_linear_predictor({{1.0, 0.5}, 0.0}, 2);
    ExplainerConfig cfg;
    const auto E = explain_dataset(*m, d, cfg, 1);
    const auto path = std::filesystem::temp_directory_path() / "axebench_test_expl.csv";
    write_explanations_csv(path, E, d.feature_names());
    const auto back = read_explanations_csv(path);
    ASSERT_EQ(back.size(), E.size());
    for (std::size_t i = 0; i < E.size(); ++i) {
        EXPECT_EQ(back[i].importances, E[i].importances);
        EXPECT_EQ(back[i].datapoint_index, E[i].datapoint_index);
    }
    const auto j = explanations_from_json(explanations_to_json(E));
    for (std::size_t i = 0; i < E.size(); ++i) EXPECT_EQ(j[i].importances, E[i].importances);
    std::filesystem::remove(path);
}

TEST(Config, Validation) {
    ExplainerConfig cfg;
    cfg.kind = ExplainerKind::LocalSurrogate;
    cfg.samples = 3;
    EXPECT_THROW(cfg.validate(4), Error);
    cfg.samples = 100;
    cfg.sigma_perturb = 0;
    EXPECT_THROW(cfg.validate(4), Error);
    EXPECT_THROW(parse_explainer_kind("deep-lift"), Error);
    EXPECT_EQ(parse_explainer_kind("kernel-shapley"), ExplainerKind::KernelShapley);
}
