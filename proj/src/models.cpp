#include "axebench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "axebench/support.hpp"

namespace axebench {

namespace {

Error model_error(const std::string& what) { return Error("models", what); }

void check_dim(std::span<const double> x, std::size_t dim) {
    if (x.size() != dim)
        throw model_error("input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(dim));
}

std::string format_number(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

bool rule_fires(const RuleModelSpec& spec, std::span<const double> x) {
    const bool above = x[spec.feature_index] > spec.threshold;
    return spec.positive_above ? above : !above;
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

void LinearModelSpec::validate() const {
    if (coefficients.empty()) throw model_error("linear model needs at least one coefficient");
    bool nonzero = false;
    for (double b : coefficients) {
        if (!std::isfinite(b)) throw model_error("non-finite coefficient");
        nonzero = nonzero || b != 0.0;
    }
    if (!std::isfinite(intercept)) throw model_error("non-finite intercept");
    if (!nonzero) throw model_error("linear model needs a nonzero coefficient");
}

LinearPredictor::LinearPredictor(LinearModelSpec spec, std::string descriptor)
    : spec_(std::move(spec)), descriptor_(std::move(descriptor)) {
    spec_.validate();
}

double LinearPredictor::score(std::span<const double> x) const {
    check_dim(x, spec_.coefficients.size());
    double z = spec_.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) z += spec_.coefficients[j] * x[j];
    return z;
}

double LinearPredictor::predict_proba(std::span<const double> x) const { return sigmoid(score(x)); }

std::optional<std::vector<double>> LinearPredictor::gradient(std::span<const double> x) const {
    const double p = predict_proba(x);
    std::vector<double> g(spec_.coefficients);
    for (double& v : g) v *= p * (1.0 - p);
    return g;
}

RulePredictor::RulePredictor(RuleModelSpec spec, std::size_t input_dim) : spec_(spec), dim_(input_dim) {
    if (spec_.feature_index >= dim_) throw model_error("rule feature index out of range");
    if (!std::isfinite(spec_.threshold)) throw model_error("non-finite rule threshold");
}

double RulePredictor::predict_proba(std::span<const double> x) const {
    check_dim(x, dim_);
    return rule_fires(spec_, x) ? 1.0 : 0.0;
}

std::string RulePredictor::descriptor() const {
    return "rule[x" + std::to_string(spec_.feature_index) + (spec_.positive_above ? ">" : "<=") +
           format_number(spec_.threshold) + "]";
}

XorRulePredictor::XorRulePredictor(RuleModelSpec first, RuleModelSpec second, std::size_t input_dim)
    : first_(first, input_dim), second_(second, input_dim) {}

double XorRulePredictor::predict_proba(std::span<const double> x) const {
    check_dim(x, input_dim());
    return (rule_fires(first_.spec(), x) != rule_fires(second_.spec(), x)) ? 1.0 : 0.0;
}

std::string XorRulePredictor::descriptor() const {
    return "xor(" + first_.descriptor() + "," + second_.descriptor() + ")";
}

std::shared_ptr<const LinearPredictor> make_linear_predictor(const LinearModelSpec& spec, std::size_t feature_count) {
    if (spec.coefficients.size() != feature_count)
        throw model_error("dimension mismatch: " + std::to_string(spec.coefficients.size()) +
                          " coefficients for " + std::to_string(feature_count) + " features");
    return std::make_shared<LinearPredictor>(spec);
}

std::shared_ptr<const RulePredictor> make_rule_predictor(const RuleModelSpec& spec, std::size_t feature_count) {
    return std::make_shared<RulePredictor>(spec, feature_count);
}

std::shared_ptr<const LinearPredictor> train_logistic(const Dataset& d, double l2, std::uint64_t seed,
                                                      std::size_t epochs, double learning_rate) {
    if (!d.labels()) throw model_error("logistic regression needs labels");
    const auto& y = *d.labels();
    const auto positives = std::count(y.begin(), y.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == y.size())
        throw model_error("labels contain a single class");
    if (l2 < 0) throw model_error("l2 must be non-negative");

    const std::size_t n = d.rows(), p = d.cols();
    Rng rng = make_rng(seed, "models.logistic");
    std::vector<double> w(p);
    for (double& v : w) v = 0.01 * standard_normal(rng);
    double b = 0.0;
    std::vector<double> grad(p);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = d.row(i);
            double z = b;
            for (std::size_t j = 0; j < p; ++j) z += w[j] * x[j];
            const double r = sigmoid(z) - y[i];
            for (std::size_t j = 0; j < p; ++j) grad[j] += r * x[j];
            grad_b += r;
        }
        for (std::size_t j = 0; j < p; ++j) w[j] -= learning_rate * (grad[j] / n + l2 * w[j]);
        b -= learning_rate * grad_b / n;
    }
    return std::make_shared<LinearPredictor>(LinearModelSpec{w, b}, "logistic");
}

// ---------------------------------------------------------------------------

namespace {

double activate(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : sigmoid(z); }

// Derivative expressed through the activation output.
double activate_prime(Activation a, double out) {
    return a == Activation::Tanh ? 1.0 - out * out : out * (1.0 - out);
}

struct ForwardPass {
    std::vector<std::vector<double>> outputs;  // outputs[0] = input, last = logit (size 1)
};

ForwardPass forward(const std::vector<MlpPredictor::Layer>& layers, Activation act, std::span<const double> x) {
    ForwardPass pass;
    pass.outputs.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const auto& in = pass.outputs.back();
        std::vector<double> out(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            double z = layer.bias[o];
            for (std::size_t i = 0; i < layer.in; ++i) z += layer.weights[o * layer.in + i] * in[i];
            out[o] = (l + 1 == layers.size()) ? z : activate(act, z);
        }
        pass.outputs.push_back(std::move(out));
    }
    return pass;
}

}  // namespace

MlpPredictor::MlpPredictor(std::vector<Layer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
    if (layers_.size() < 2) throw model_error("mlp needs at least one hidden layer");
    if (layers_.back().out != 1) throw model_error("mlp output layer must have one unit");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        if (L.weights.size() != L.in * L.out || L.bias.size() != L.out) throw model_error("mlp layer shape mismatch");
        if (l > 0 && layers_[l - 1].out != L.in) throw model_error("mlp layers do not chain");
    }
}

double MlpPredictor::predict_proba(std::span<const double> x) const {
    check_dim(x, input_dim());
    return sigmoid(forward(layers_, activation_, x).outputs.back()[0]);
}

std::optional<std::vector<double>> MlpPredictor::gradient(std::span<const double> x) const {
    check_dim(x, input_dim());
    const auto pass = forward(layers_, activation_, x);
    const double p = sigmoid(pass.outputs.back()[0]);
    std::vector<double> delta{p * (1.0 - p)};  // d proba / d pre-activation of current layer
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        std::vector<double> upstream(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o)
            for (std::size_t i = 0; i < layer.in; ++i) upstream[i] += layer.weights[o * layer.in + i] * delta[o];
        if (l > 0) {
            const auto& act_out = pass.outputs[l];
            for (std::size_t i = 0; i < layer.in; ++i) upstream[i] *= activate_prime(activation_, act_out[i]);
        }
        delta = std::move(upstream);
    }
    return delta;
}

std::shared_ptr<const MlpPredictor> train_mlp(const Dataset& d, const MlpSpec& spec) {
    if (!d.labels()) throw model_error("mlp training needs labels");
    if (spec.hidden_sizes.empty()) throw model_error("mlp needs at least one hidden layer");
    const auto& y = *d.labels();
    Rng rng = make_rng(spec.seed, "models.mlp");

    std::vector<MlpPredictor::Layer> layers;
    std::size_t in = d.cols();
    auto sizes = spec.hidden_sizes;
    sizes.push_back(1);
    for (std::size_t out : sizes) {
        if (out == 0) throw model_error("mlp layer width must be positive");
        MlpPredictor::Layer L{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : L.weights) w = scale * standard_normal(rng);
        layers.push_back(std::move(L));
        in = out;
    }

    const std::size_t n = d.rows();
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        std::vector<std::vector<double>> gw(layers.size()), gb(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            gw[l].assign(layers[l].weights.size(), 0.0);
            gb[l].assign(layers[l].bias.size(), 0.0);
        }
        for (std::size_t r = 0; r < n; ++r) {
            const auto pass = forward(layers, spec.activation, d.row(r));
            std::vector<double> delta{sigmoid(pass.outputs.back()[0]) - y[r]};  // dBCE/dlogit
            for (std::size_t l = layers.size(); l-- > 0;) {
                const auto& L = layers[l];
                const auto& input = pass.outputs[l];
                std::vector<double> upstream(L.in, 0.0);
                for (std::size_t o = 0; o < L.out; ++o) {
                    gb[l][o] += delta[o];
                    for (std::size_t i = 0; i < L.in; ++i) {
                        gw[l][o * L.in + i] += delta[o] * input[i];
                        upstream[i] += L.weights[o * L.in + i] * delta[o];
                    }
                }
                if (l > 0)
                    for (std::size_t i = 0; i < L.in; ++i) upstream[i] *= activate_prime(spec.activation, input[i]);
                delta = std::move(upstream);
            }
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& L = layers[l];
            for (std::size_t k = 0; k < L.weights.size(); ++k)
                L.weights[k] -= spec.learning_rate * (gw[l][k] / n + spec.l2 * L.weights[k]);
            for (std::size_t k = 0; k < L.bias.size(); ++k) L.bias[k] -= spec.learning_rate * gb[l][k] / n;
        }
    }
    return std::make_shared<MlpPredictor>(std::move(layers), spec.activation);
}

// ---------------------------------------------------------------------------

TreeEnsemble::TreeEnsemble(std::vector<Tree> trees, std::size_t input_dim)
    : trees_(std::move(trees)), dim_(input_dim) {
    if (trees_.empty()) throw model_error("tree ensemble needs at least one tree");
}

double TreeEnsemble::predict_proba(std::span<const double> x) const {
    check_dim(x, dim_);
    double sum = 0.0;
    for (const auto& tree : trees_) {
        int node = 0;
        while (tree[node].feature >= 0)
            node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
        sum += tree[node].value;
    }
    return sum / static_cast<double>(trees_.size());
}

std::string TreeEnsemble::descriptor() const { return "tree-ensemble[" + std::to_string(trees_.size()) + "]"; }

namespace {

struct TreeBuilder {
    std::span<const double> inputs;
    std::size_t cols;
    std::span<const int> labels;
    const TreeEnsembleParams& params;
    std::size_t mtry;
    Rng& rng;
    TreeEnsemble::Tree tree;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double impurity = std::numeric_limits<double>::infinity();
    };

    double value(std::size_t row, std::size_t f) const { return inputs[row * cols + f]; }

    void best_split_on(std::size_t f, std::vector<std::size_t>& rows, std::size_t positives, Split& best) const {
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            const double va = value(a, f), vb = value(b, f);
            return va < vb || (va == vb && a < b);
        });
        const double total = static_cast<double>(rows.size());
        std::size_t left_pos = 0;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            left_pos += static_cast<std::size_t>(labels[rows[i]]);
            const double a = value(rows[i], f), b = value(rows[i + 1], f);
            if (!(a < b)) continue;
            const std::size_t nl = i + 1, nr = rows.size() - nl;
            if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
            const double pl = static_cast<double>(left_pos) / nl;
            const double pr = static_cast<double>(positives - left_pos) / nr;
            const double impurity = (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)) / total;
            if (impurity < best.impurity) {
                double mid = a + (b - a) / 2.0;
                if (!(mid < b)) mid = a;
                best = {static_cast<int>(f), mid, impurity};
            }
        }
    }

    int build(std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(tree.size());
        tree.push_back({});
        std::size_t positives = 0;
        for (std::size_t r : rows) positives += static_cast<std::size_t>(labels[r]);
        tree[id].value = static_cast<double>(positives) / static_cast<double>(rows.size());
        if (positives == 0 || positives == rows.size() || depth >= params.max_depth ||
            rows.size() < 2 * params.min_samples_leaf)
            return id;

        std::vector<std::size_t> features(cols);
        std::iota(features.begin(), features.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry; ++i) std::swap(features[i], features[i + uniform_index(rng, cols - i)]);
        Split best;
        for (std::size_t i = 0; i < mtry; ++i) best_split_on(features[i], rows, positives, best);
        for (std::size_t i = mtry; i < cols && best.feature < 0; ++i) best_split_on(features[i], rows, positives, best);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (value(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(std::move(left), depth + 1);
        const int r = build(std::move(right), depth + 1);
        tree[id].feature = best.feature;
        tree[id].threshold = best.threshold;
        tree[id].left = l;
        tree[id].right = r;
        return id;
    }
};

}  // namespace

std::shared_ptr<const TreeEnsemble> train_tree_ensemble(std::span<const double> inputs, std::size_t cols,
                                                        std::span<const int> labels,
                                                        const TreeEnsembleParams& params) {
    if (cols == 0 || inputs.size() != labels.size() * cols || labels.empty())
        throw model_error("tree ensemble input shape mismatch");
    if (params.trees == 0) throw model_error("tree ensemble needs at least one tree");
    const std::size_t n = labels.size();
    std::size_t mtry = params.features_per_split;
    if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cols))));
    mtry = std::min(mtry, cols);

    std::vector<TreeEnsemble::Tree> trees(params.trees);
    parallel_for(params.trees, [&](std::size_t t) {
        Rng rng = make_rng(params.seed, "models.tree", t);
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = uniform_index(rng, n);
        TreeBuilder builder{inputs, cols, labels, params, mtry, rng, {}};
        builder.build(std::move(sample), 0);
        trees[t] = std::move(builder.tree);
    });
    return std::make_shared<TreeEnsemble>(std::move(trees), cols);
}

// ---------------------------------------------------------------------------

std::string to_string(PerturbationKind kind) {
    return kind == PerturbationKind::Gaussian ? "gaussian" : "substitution";
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
    if (name == "gaussian") return PerturbationKind::Gaussian;
    if (name == "substitution") return PerturbationKind::Substitution;
    throw model_error("unknown perturbation kind '" + name + "'");
}

namespace {

// `copies` rounds of (every row in `rows`, then one perturbed copy of each).
void append_perturbed(const Dataset& d, std::span<const std::size_t> rows, PerturbationKind kind, double sigma,
                      std::size_t copies, Rng& rng, std::vector<double>& inputs, std::vector<int>& labels) {
    const std::size_t p = d.cols();
    for (std::size_t c = 0; c < copies; ++c) {
    for (std::size_t r : rows) {
        const auto x = d.row(r);
        inputs.insert(inputs.end(), x.begin(), x.end());
        labels.push_back(0);
    }
    for (std::size_t r : rows) {
        std::vector<double> z(d.row(r).begin(), d.row(r).end());
        if (kind == PerturbationKind::Gaussian) {
            for (double& v : z) v += sigma * standard_normal(rng);
        } else {
            const auto donor = d.row(rows[uniform_index(rng, rows.size())]);
            bool changed = false;
            for (std::size_t j = 0; j < p; ++j)
                if (uniform_index(rng, 2) == 1) {
                    z[j] = donor[j];
                    changed = true;
                }
            if (!changed) {
                const std::size_t j = uniform_index(rng, p);
                z[j] = donor[j];
            }
        }
        inputs.insert(inputs.end(), z.begin(), z.end());
        labels.push_back(1);
    }
    }
}

}  // namespace

OodDetector train_ood_detector(const Dataset& d, double sigma, std::uint64_t seed, PerturbationKind kind,
                               TreeEnsembleParams params, std::size_t copies) {
    if (d.rows() < 50) throw model_error("out-of-distribution detector needs at least 50 rows");
    if (copies < 1) throw model_error("detector needs at least one perturbed copy per row");
    if (sigma < 0 || !std::isfinite(sigma)) throw model_error("perturbation std must be non-negative");
    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "models.ood");
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    const std::size_t train_n = d.rows() * 4 / 5;
    std::span<const std::size_t> train_rows(order.data(), train_n);
    std::span<const std::size_t> held_rows(order.data() + train_n, order.size() - train_n);

    std::vector<double> train_x, held_x;
    std::vector<int> train_y, held_y;
    append_perturbed(d, train_rows, kind, sigma, copies, rng, train_x, train_y);
    append_perturbed(d, held_rows, kind, sigma, copies, rng, held_x, held_y);

    params.seed = derive_seed(seed, "models.ood.trees");
    OodDetector det;
    det.classifier = train_tree_ensemble(train_x, d.cols(), train_y, params);
    det.kind = kind;
    det.sigma = sigma;
    std::size_t correct = 0, real_correct = 0;
    for (std::size_t i = 0; i < held_y.size(); ++i) {
        const std::span<const double> x(held_x.data() + i * d.cols(), d.cols());
        const int flagged = det.in_distribution(x) ? 0 : 1;
        if (flagged == held_y[i]) {
            ++correct;
            if (held_y[i] == 0) ++real_correct;
        }
    }
    det.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(held_y.size());
    det.heldout_real_accuracy =
        static_cast<double>(real_correct) / static_cast<double>(held_rows.size() * copies);

    // The deployed detector sees every row; the split above only estimates accuracy.
    train_x.insert(train_x.end(), held_x.begin(), held_x.end());
    train_y.insert(train_y.end(), held_y.begin(), held_y.end());
    det.classifier = train_tree_ensemble(train_x, d.cols(), train_y, params);
    return det;
}

ScaffoldPredictor::ScaffoldPredictor(std::shared_ptr<const RulePredictor> biased,
                                     std::shared_ptr<const Predictor> foil, OodDetector detector,
                                     std::string descriptor)
    : biased_(std::move(biased)),
      foil_(std::move(foil)),
      detector_(std::move(detector)),
      descriptor_(std::move(descriptor)) {
    if (!biased_ || !foil_ || !detector_.classifier) throw model_error("scaffold is missing a component");
    if (foil_->input_dim() != biased_->input_dim() || detector_.classifier->input_dim() != biased_->input_dim())
        throw model_error("scaffold components disagree on input width");
}

double ScaffoldPredictor::predict_proba(std::span<const double> x) const {
    return detector_.in_distribution(x) ? biased_->predict_proba(x) : foil_->predict_proba(x);
}

std::shared_ptr<const ScaffoldPredictor> build_scaffold(const Dataset& d, const ScaffoldSpec& spec) {
    if (spec.foil_models.empty()) throw model_error("at least one foil required");
    if (spec.foil_models.size() > 2) throw model_error("at most two foils supported");
    for (const auto& f : spec.foil_models)
        if (f.feature_index == spec.biased_model.feature_index)
            throw model_error("foil feature must differ from the protected feature");
    if (spec.foil_models.size() == 2 && spec.foil_models[0].feature_index == spec.foil_models[1].feature_index)
        throw model_error("foil features must be distinct");

    auto biased = make_rule_predictor(spec.biased_model, d.cols());
    std::shared_ptr<const Predictor> foil;
    if (spec.foil_models.size() == 1)
        foil = make_rule_predictor(spec.foil_models[0], d.cols());
    else
        foil = std::make_shared<XorRulePredictor>(spec.foil_models[0], spec.foil_models[1], d.cols());

    OodDetector detector = spec.detector ? *spec.detector
                                         : train_ood_detector(d, spec.perturbation_std, spec.seed,
                                                              spec.perturbation, spec.detector_params,
                                                              spec.perturbation_copies);
    std::ostringstream desc;
    desc << "scaffold(biased=" << biased->descriptor() << ", foil=" << foil->descriptor()
         << ", detector=" << to_string(detector.kind);
    if (detector.kind == PerturbationKind::Gaussian) desc << " sigma=" << detector.sigma;
    desc << " acc=" << detector.heldout_accuracy << ")";
    if (detector.heldout_accuracy < spec.accuracy_floor)
        desc << " [warning: detector accuracy " << detector.heldout_accuracy << " below floor "
             << spec.accuracy_floor << "]";
    return std::make_shared<ScaffoldPredictor>(std::move(biased), std::move(foil), std::move(detector), desc.str());
}

double agreement_rate(const Predictor& a, const Predictor& b, const Dataset& d) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) same += a.predict(d.row(i)) == b.predict(d.row(i)) ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(d.rows());
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json rule_json(const RuleModelSpec& s, std::size_t dim) {
    return {{"type", "rule"},
            {"feature_index", s.feature_index},
            {"threshold", s.threshold},
            {"positive_above", s.positive_above},
            {"input_dim", dim}};
}

RuleModelSpec rule_spec(const nlohmann::json& j) {
    return {j.at("feature_index").get<std::size_t>(), j.at("threshold").get<double>(),
            j.at("positive_above").get<bool>()};
}

nlohmann::json trees_json(const TreeEnsemble& t) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : t.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
    }
    return {{"type", "tree-ensemble"}, {"input_dim", t.input_dim()}, {"trees", std::move(trees)}};
}

std::shared_ptr<const TreeEnsemble> trees_from_json(const nlohmann::json& j) {
    std::vector<TreeEnsemble::Tree> trees;
    for (const auto& jt : j.at("trees")) {
        TreeEnsemble::Tree tree;
        for (const auto& n : jt)
            tree.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                            n.at(4).get<double>()});
        trees.push_back(std::move(tree));
    }
    return std::make_shared<TreeEnsemble>(std::move(trees), j.at("input_dim").get<std::size_t>());
}

}  // namespace

nlohmann::json save_model(const Predictor& model) {
    if (auto* lin = dynamic_cast<const LinearPredictor*>(&model))
        return {{"type", "linear"},
                {"descriptor", lin->descriptor()},
                {"coefficients", lin->spec().coefficients},
                {"intercept", lin->spec().intercept}};
    if (auto* rule = dynamic_cast<const RulePredictor*>(&model)) return rule_json(rule->spec(), rule->input_dim());
    if (auto* x = dynamic_cast<const XorRulePredictor*>(&model))
        return {{"type", "xor-rule"},
                {"first", rule_json(x->first().spec(), x->input_dim())},
                {"second", rule_json(x->second().spec(), x->input_dim())}};
    if (auto* t = dynamic_cast<const TreeEnsemble*>(&model)) return trees_json(*t);
    if (auto* mlp = dynamic_cast<const MlpPredictor*>(&model)) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& L : mlp->layers())
            layers.push_back({{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
        return {{"type", "mlp"},
                {"activation", mlp->activation() == Activation::Tanh ? "tanh" : "sigmoid"},
                {"layers", std::move(layers)}};
    }
    if (auto* s = dynamic_cast<const ScaffoldPredictor*>(&model)) {
        const auto& det = s->detector();
        return {{"type", "scaffold"},
                {"descriptor", s->descriptor()},
                {"biased", save_model(s->biased())},
                {"foil", save_model(s->foil())},
                {"detector",
                 {{"kind", to_string(det.kind)},
                  {"sigma", det.sigma},
                  {"heldout_accuracy", det.heldout_accuracy},
                  {"heldout_real_accuracy", det.heldout_real_accuracy},
                  {"classifier", trees_json(*det.classifier)}}}};
    }
    throw model_error("model '" + model.descriptor() + "' cannot be serialized");
}

PredictorPtr load_model(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "linear")
        return std::make_shared<LinearPredictor>(
            LinearModelSpec{j.at("coefficients").get<std::vector<double>>(), j.at("intercept").get<double>()},
            j.value("descriptor", std::string("linear")));
    if (type == "rule") return std::make_shared<RulePredictor>(rule_spec(j), j.at("input_dim").get<std::size_t>());
    if (type == "xor-rule")
        return std::make_shared<XorRulePredictor>(rule_spec(j.at("first")), rule_spec(j.at("second")),
                                                  j.at("first").at("input_dim").get<std::size_t>());
    if (type == "tree-ensemble") return trees_from_json(j);
    if (type == "mlp") {
        std::vector<MlpPredictor::Layer> layers;
        for (const auto& L : j.at("layers"))
            layers.push_back({L.at("in").get<std::size_t>(), L.at("out").get<std::size_t>(),
                              L.at("weights").get<std::vector<double>>(), L.at("bias").get<std::vector<double>>()});
        return std::make_shared<MlpPredictor>(std::move(layers), j.at("activation") == "tanh" ? Activation::Tanh
                                                                                           : Activation::Sigmoid);
    }
    if (type == "scaffold") {
        auto biased = std::dynamic_pointer_cast<const RulePredictor>(load_model(j.at("biased")));
        if (!biased) throw model_error("scaffold biased model must be a rule");
        const auto& jd = j.at("detector");
        OodDetector det;
        det.kind = parse_perturbation_kind(jd.at("kind").get<std::string>());
        det.sigma = jd.at("sigma").get<double>();
        det.heldout_accuracy = jd.at("heldout_accuracy").get<double>();
        det.heldout_real_accuracy = jd.value("heldout_real_accuracy", 0.0);
        det.classifier = trees_from_json(jd.at("classifier"));
        return std::make_shared<ScaffoldPredictor>(std::move(biased), load_model(j.at("foil")), std::move(det),
                                                   j.at("descriptor").get<std::string>());
    }
    throw model_error("unknown model type '" + type + "'");
}

}  // namespace axebench
