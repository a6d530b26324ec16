#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "axebench/core.hpp"

namespace axebench {

double sigmoid(double z);

struct LinearModelSpec {
    std::vector<double> coefficients;
    double intercept = 0.0;

    void validate() const;
};

/// predict_proba = sigmoid(intercept + coefficients . x).
class LinearPredictor final : public Predictor {
public:
    explicit LinearPredictor(LinearModelSpec spec, std::string descriptor = "linear");

    double predict_proba(std::span<const double> x) const override;
    std::optional<std::vector<double>> gradient(std::span<const double> x) const override;
    std::string descriptor() const override { return descriptor_; }
    std::size_t input_dim() const override { return spec_.coefficients.size(); }

    double score(std::span<const double> x) const;
    const LinearModelSpec& spec() const { return spec_; }

private:
    LinearModelSpec spec_;
    std::string descriptor_;
};

struct RuleModelSpec {
    std::size_t feature_index = 0;
    double threshold = 0.0;
    bool positive_above = true;
};

/// predict = 1[x_f > threshold] (inverted when !positive_above). No gradient.
class RulePredictor final : public Predictor {
public:
    RulePredictor(RuleModelSpec spec, std::size_t input_dim);

    double predict_proba(std::span<const double> x) const override;
    std::string descriptor() const override;
    std::size_t input_dim() const override { return dim_; }
    const RuleModelSpec& spec() const { return spec_; }

private:
    RuleModelSpec spec_;
    std::size_t dim_;
};

/// Two-rule exclusive-or: positive when exactly one of the rules fires.
class XorRulePredictor final : public Predictor {
public:
    XorRulePredictor(RuleModelSpec first, RuleModelSpec second, std::size_t input_dim);

    double predict_proba(std::span<const double> x) const override;
    std::string descriptor() const override;
    std::size_t input_dim() const override { return first_.input_dim(); }

    const RulePredictor& first() const { return first_; }
    const RulePredictor& second() const { return second_; }

private:
    RulePredictor first_;
    RulePredictor second_;
};

std::shared_ptr<const LinearPredictor> make_linear_predictor(const LinearModelSpec& spec, std::size_t feature_count);
std::shared_ptr<const RulePredictor> make_rule_predictor(const RuleModelSpec& spec, std::size_t feature_count);

/// Full-batch gradient-descent logistic regression on standardized features.
std::shared_ptr<const LinearPredictor> train_logistic(const Dataset& d, double l2, std::uint64_t seed,
                                                      std::size_t epochs = 2000, double learning_rate = 0.5);

// ---------------------------------------------------------------------------
// Small multilayer perceptron with analytic input gradient.

enum class Activation { Sigmoid, Tanh };

struct MlpSpec {
    std::vector<std::size_t> hidden_sizes{8};
    Activation activation = Activation::Tanh;
    double l2 = 1e-4;
    std::size_t epochs = 500;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
};

class MlpPredictor final : public Predictor {
public:
    struct Layer {
        std::size_t in = 0, out = 0;
        std::vector<double> weights;  // out x in, row-major
        std::vector<double> bias;
    };

    MlpPredictor(std::vector<Layer> layers, Activation activation);

    double predict_proba(std::span<const double> x) const override;
    std::optional<std::vector<double>> gradient(std::span<const double> x) const override;
    std::string descriptor() const override { return "mlp"; }
    std::size_t input_dim() const override { return layers_.front().in; }

    const std::vector<Layer>& layers() const { return layers_; }
    Activation activation() const { return activation_; }

private:
    std::vector<Layer> layers_;
    Activation activation_;
};

std::shared_ptr<const MlpPredictor> train_mlp(const Dataset& d, const MlpSpec& spec);

// ---------------------------------------------------------------------------
// Bagged axis-aligned decision trees (binary classification).

struct TreeEnsembleParams {
    std::size_t trees = 25;
    std::size_t max_depth = 14;
    std::size_t min_samples_leaf = 1;
    /// Features examined per split; 0 means ceil(sqrt(N)).
    std::size_t features_per_split = 0;
    std::uint64_t seed = 0;
};

class TreeEnsemble final : public Predictor {
public:
    struct Node {
        // Leaves have feature == -1 and carry the positive-class fraction.
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    TreeEnsemble(std::vector<Tree> trees, std::size_t input_dim);

    /// Fraction-of-trees vote for class 1, averaged leaf probabilities.
    double predict_proba(std::span<const double> x) const override;
    std::string descriptor() const override;
    std::size_t input_dim() const override { return dim_; }
    const std::vector<Tree>& trees() const { return trees_; }

private:
    std::vector<Tree> trees_;
    std::size_t dim_;
};

/// rows x cols row-major inputs, labels in {0,1}.
std::shared_ptr<const TreeEnsemble> train_tree_ensemble(std::span<const double> inputs, std::size_t cols,
                                                        std::span<const int> labels,
                                                        const TreeEnsembleParams& params);

// ---------------------------------------------------------------------------
// Scaffolding attack.

/// How the detector's "off-manifold" class is sampled.
///  - Gaussian: x + N(0, sigma^2 I), the neighbourhood a local-surrogate explainer samples.
///  - Substitution: a random subset of features replaced by another row's values,
///    the coalitions a background-substitution Shapley explainer evaluates.
enum class PerturbationKind { Gaussian, Substitution };

std::string to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(const std::string& name);

struct OodDetector {
    std::shared_ptr<const TreeEnsemble> classifier;
    PerturbationKind kind = PerturbationKind::Gaussian;
    double sigma = 1.0;
    double heldout_accuracy = 0.0;
    /// Held-out accuracy on real rows only (fraction flagged in-distribution).
    double heldout_real_accuracy = 0.0;

    bool in_distribution(std::span<const double> x) const { return classifier->predict_proba(x) < 0.5; }
};

/// Real rows (class 0) against perturbed copies (class 1), balanced: each of
/// `copies` rounds adds every row once and one fresh perturbation of it.
/// Accuracy is estimated on a held-out 20% of rows; the returned classifier
/// is then refit on all rows.
OodDetector train_ood_detector(const Dataset& d, double sigma, std::uint64_t seed,
                               PerturbationKind kind = PerturbationKind::Gaussian,
                               TreeEnsembleParams params = {}, std::size_t copies = 10);

struct ScaffoldSpec {
    RuleModelSpec biased_model;
    std::vector<RuleModelSpec> foil_models;
    PerturbationKind perturbation = PerturbationKind::Gaussian;
    double perturbation_std = 1.0;
    /// Perturbed copies per row in the detector's training set.
    std::size_t perturbation_copies = 10;
    std::uint64_t seed = 0;
    double accuracy_floor = 0.85;
    TreeEnsembleParams detector_params;
    /// Pre-trained detector; trained from the dataset when empty.
    std::optional<OodDetector> detector;
};

/// m_e(x) = biased(x) when the detector calls x in-distribution, otherwise the
/// foil model (the single foil rule, or the XOR of two foil rules).
class ScaffoldPredictor final : public Predictor {
public:
    ScaffoldPredictor(std::shared_ptr<const RulePredictor> biased, std::shared_ptr<const Predictor> foil,
                      OodDetector detector, std::string descriptor);

    double predict_proba(std::span<const double> x) const override;
    std::string descriptor() const override { return descriptor_; }
    std::size_t input_dim() const override { return biased_->input_dim(); }

    const RulePredictor& biased() const { return *biased_; }
    const Predictor& foil() const { return *foil_; }
    const OodDetector& detector() const { return detector_; }
    std::shared_ptr<const RulePredictor> biased_ptr() const { return biased_; }
    std::shared_ptr<const Predictor> foil_ptr() const { return foil_; }

private:
    std::shared_ptr<const RulePredictor> biased_;
    std::shared_ptr<const Predictor> foil_;
    OodDetector detector_;
    std::string descriptor_;
};

std::shared_ptr<const ScaffoldPredictor> build_scaffold(const Dataset& d, const ScaffoldSpec& spec);

/// Fraction of dataset rows on which two predictors agree.
double agreement_rate(const Predictor& a, const Predictor& b, const Dataset& d);

// ---------------------------------------------------------------------------
// JSON persistence (spec + weights).

nlohmann::json save_model(const Predictor& model);
PredictorPtr load_model(const nlohmann::json& j);

}  // namespace axebench
