#include <gtest/gtest.h>

#include <cmath>

#include "axebench/data.hpp"
#include "axebench/models.hpp"
#include "axebench/support.hpp"

using namespace axebench;

namespace {

const std::filesystem::path kData = AXEBENCH_DATA_DIR;

std::vector<double> finite_difference(const Predictor& m, std::span<const double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    std::vector<double> z(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
        z[j] = x[j] + h;
        const double up = m.predict_proba(z);
        z[j] = x[j] - h;
        const double down = m.predict_proba(z);
        z[j] = x[j];
        g[j] = (up - down) / (2 * h);
    }
    return g;
}

const Dataset& german() {
    static const Dataset d =
        load_csv(kData / "german_credit.csv", load_schema(kData / "schemas/german_credit.json"));
    return d;
}

}  // namespace

TEST(Linear, ZeroScoreIsPositiveClass) {
    const auto m = make_linear_predictor({{0.7, 0.3}, 0.0}, 2);
    const std::vector<double> x{0, 0};
    EXPECT_DOUBLE_EQ(m->predict_proba(x), 0.5);
    EXPECT_EQ(m->predict(x), 1);
}

TEST(Linear, DimensionMismatchIsAnError) {
    EXPECT_THROW(make_linear_predictor({{0.7, 0.3}, 0.0}, 3), Error);
    const auto m = make_linear_predictor({{0.7, 0.3}, 0.0}, 2);
    EXPECT_THROW(m->predict_proba(std::vector<double>{1, 2, 3}), Error);
}

TEST(Linear, GradientMatchesFiniteDifference) {
    const auto m = make_linear_predictor({{0.7, -0.3, 1.2}, 0.1}, 3);
    const std::vector<double> x{0.3, -1.0, 0.4};
    const auto g = *m->gradient(x);
    const auto fd = finite_difference(*m, x);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g[j], fd[j], 1e-8);
}

TEST(Linear, RashomonAgreementOnGrid) {
    // 0.7 a + 0.3 b and 0.5 a + 0.3 b disagree exactly where their scores have
    // opposite signs; count that set in integer arithmetic, skipping points
    // on either decision boundary.
    const auto m1 = make_linear_predictor({{0.7, 0.3}, 0.0}, 2);
    const auto m2 = make_linear_predictor({{0.5, 0.3}, 0.0}, 2);
    std::size_t agree = 0, total = 0, oracle_agree = 0;
    for (int a = -20; a <= 20; ++a)
        for (int b = -20; b <= 20; ++b) {
            const int s1 = 7 * a + 3 * b, s2 = 5 * a + 3 * b;
            if (s1 == 0 || s2 == 0) continue;
            const std::vector<double> x{a / 10.0, b / 10.0};
            agree += m1->predict(x) == m2->predict(x);
            oracle_agree += (s1 > 0) == (s2 > 0);
            ++total;
        }
    EXPECT_EQ(agree, oracle_agree);
    EXPECT_GT(static_cast<double>(agree) / static_cast<double>(total), 0.9);
    EXPECT_LT(agree, total);
}

TEST(Logistic, FitsThresholdRule) {
    const auto d = generate_synthetic({500, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto m = train_logistic(d, 1e-3, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) correct += m->predict(d.row(i)) == (*d.labels())[i];
    EXPECT_GE(correct / 500.0, 0.95);
    EXPECT_GT(m->spec().coefficients[0], 0.0);
    EXPECT_GT(std::abs(m->spec().coefficients[0]), 5 * std::abs(m->spec().coefficients[1]));
}

TEST(Logistic, SingleClassIsAnError) {
    auto d = generate_synthetic({20, 2, 1, GeneratorKind::ThresholdRule, {}});
    d.set_labels(std::vector<int>(20, 1));
    EXPECT_THROW(train_logistic(d, 0.0, 0), Error);
}

TEST(Mlp, GradientMatchesFiniteDifferenceAndLearns) {
    const auto d = generate_synthetic({200, 3, 4, GeneratorKind::GaussianBlobs, {}});
    MlpSpec spec;
    spec.hidden_sizes = {6, 4};
    spec.epochs = 300;
    const auto m = train_mlp(d, spec);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) correct += m->predict(d.row(i)) == (*d.labels())[i];
    EXPECT_GE(correct / 200.0, 0.9);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto g = *m->gradient(d.row(i));
        const auto fd = finite_difference(*m, d.row(i));
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g[j], fd[j], 1e-6);
    }
}

TEST(Rule, FiresAboveThreshold) {
    const auto m = make_rule_predictor({1, 0.0, true}, 3);
    EXPECT_EQ(m->predict(std::vector<double>{0, 1, 0}), 1);
    EXPECT_EQ(m->predict(std::vector<double>{0, -1, 0}), 0);
    const auto inv = make_rule_predictor({1, 0.0, false}, 3);
    EXPECT_EQ(inv->predict(std::vector<double>{0, 1, 0}), 0);
    EXPECT_FALSE(m->gradient(std::vector<double>{0, 1, 0}));
    EXPECT_THROW(make_rule_predictor({3, 0.0, true}, 3), Error);
}

TEST(XorRule, PositiveWhenExactlyOneFires) {
    const XorRulePredictor m({0, 0.0, true}, {1, 0.0, true}, 2);
    EXPECT_EQ(m.predict(std::vector<double>{1, -1}), 1);
    EXPECT_EQ(m.predict(std::vector<double>{-1, 1}), 1);
    EXPECT_EQ(m.predict(std::vector<double>{1, 1}), 0);
    EXPECT_EQ(m.predict(std::vector<double>{-1, -1}), 0);
}

TEST(Trees, FitBlobsAndRoundTrip) {
    const auto d = generate_synthetic({300, 2, 5, GeneratorKind::GaussianBlobs, {}});
    TreeEnsembleParams p;
    p.trees = 10;
    p.max_depth = 6;
    const auto t = train_tree_ensemble(d.features(), d.cols(), *d.labels(), p);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) correct += t->predict(d.row(i)) == (*d.labels())[i];
    EXPECT_GE(correct / 300.0, 0.95);
    const auto back = load_model(save_model(*t));
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(back->predict_proba(d.row(i)), t->predict_proba(d.row(i)));
}

TEST(Trees, SameSeedSameEnsemble) {
    const auto d = generate_synthetic({100, 3, 5, GeneratorKind::ThresholdRule, {}});
    TreeEnsembleParams p;
    p.trees = 5;
    const auto a = train_tree_ensemble(d.features(), d.cols(), *d.labels(), p);
    const auto b = train_tree_ensemble(d.features(), d.cols(), *d.labels(), p);
    EXPECT_EQ(save_model(*a), save_model(*b));
}

TEST(Persistence, RoundTripsEveryModelType) {
    const auto d = generate_synthetic({120, 3, 2, GeneratorKind::ThresholdRule, {}});
    std::vector<PredictorPtr> models{make_linear_predictor({{1.0, -2.0, 0.5}, 0.2}, 3),
                                     make_rule_predictor({2, 0.1, false}, 3),
                                     std::make_shared<XorRulePredictor>(RuleModelSpec{0, 0.0, true},
                                                                        RuleModelSpec{1, 0.0, true}, 3)};
    MlpSpec ms;
    ms.epochs = 20;
    models.push_back(train_mlp(d, ms));
    for (const auto& m : models) {
        const auto j = save_model(*m);
        const auto back = load_model(j);
        EXPECT_EQ(save_model(*back), j);
        for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(back->predict_proba(d.row(i)), m->predict_proba(d.row(i)));
    }
    EXPECT_THROW(load_model(nlohmann::json{{"type", "forest"}}), Error);
}

TEST(OodDetector, GermanCreditGaussianAccuracy) {
    const auto det = train_ood_detector(german(), 1.0, 0, PerturbationKind::Gaussian);
    EXPECT_GE(det.heldout_accuracy, 0.85);
}

TEST(OodDetector, ZeroNoiseIsIndistinguishable) {
    const auto d = generate_synthetic({300, 3, 1, GeneratorKind::ThresholdRule, {}});
    const auto det = train_ood_detector(d, 0.0, 0, PerturbationKind::Gaussian, {}, 2);
    EXPECT_NEAR(det.heldout_accuracy, 0.5, 0.1);
}

TEST(Scaffold, GermanCreditRashomonAndFoilRouting) {
    const auto& d = german();
    const auto g = *d.feature_index("Gender");
    const auto loan = *d.feature_index("LoanRateAsPercentOfIncome");
    ScaffoldSpec spec;
    spec.biased_model = {g, 0.0, true};
    spec.foil_models = {{loan, 0.0, true}};
    const auto m = build_scaffold(d, spec);
    const auto biased = make_rule_predictor(spec.biased_model, d.cols());
    const double agree = agreement_rate(*m, *biased, d);
    EXPECT_GE(agree, 0.95);
    EXPECT_GE(agree, m->detector().heldout_accuracy - 0.02);

    // Off-manifold: wherever the detector flags a Gaussian-perturbed row the foil decides.
    Rng rng(3);
    std::size_t flagged = 0, foil_governs = 0;
    std::vector<double> z(d.cols());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t j = 0; j < d.cols(); ++j) z[j] = d.at(i, j) + standard_normal(rng);
        if (m->detector().in_distribution(z)) continue;
        ++flagged;
        foil_governs += m->predict(z) == m->foil().predict(z);
    }
    EXPECT_GT(flagged, d.rows() / 2);
    EXPECT_EQ(foil_governs, flagged);
}

TEST(Scaffold, FoilCountErrors) {
    const auto d = generate_synthetic({60, 3, 1, GeneratorKind::ThresholdRule, {}});
    ScaffoldSpec spec;
    spec.biased_model = {0, 0.0, true};
    try {
        build_scaffold(d, spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()), "at least one foil required");
    }
    spec.foil_models = {{0, 0.0, true}};
    EXPECT_THROW(build_scaffold(d, spec), Error);
}

TEST(Scaffold, WeakDetectorIsAWarningNotAnError) {
    const auto d = generate_synthetic({100, 3, 1, GeneratorKind::ThresholdRule, {}});
    ScaffoldSpec spec;
    spec.biased_model = {0, 0.0, true};
    spec.foil_models = {{1, 0.0, true}};
    spec.perturbation_std = 0.0;
    spec.perturbation_copies = 1;
    const auto m = build_scaffold(d, spec);
    EXPECT_NE(m->descriptor().find("warning"), std::string::npos);
}
