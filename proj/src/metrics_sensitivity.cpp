#include "axebench/metrics_sensitivity.hpp"

#include <cmath>
#include <string>

#include "axebench/support.hpp"

namespace axebench {

namespace {

Error sens_error(const std::string& what) { return Error("metrics_sensitivity", what); }

void check_explanation(std::span<const double> x, std::span<const double> e, const Predictor& m) {
    if (x.size() != e.size()) throw sens_error("length mismatch between x and e");
    if (x.size() != m.input_dim()) throw sens_error("dimension mismatch between x and model");
}

QualityReport dataset_report(const char* name, bool bottom, const Predictor& m, const Dataset& d,
                             const std::vector<Explanation>& E, const PerturbConfig& cfg, std::size_t jobs) {
    cfg.validate(d.cols());
    std::vector<double> q(E.size());
    parallel_for(
        E.size(),
        [&](std::size_t i) {
            const std::size_t row = E[i].datapoint_index;
            if (row >= d.rows()) throw sens_error("explanation row " + std::to_string(row) + " out of range");
            q[i] = bottom ? pgu(m, d.row(row), E[i].importances, cfg, row)
                          : pgi(m, d.row(row), E[i].importances, cfg, row);
        },
        jobs);
    auto r = make_report(name, q);
    r.hyperparams["n"] = std::to_string(cfg.n);
    r.hyperparams["num_perturbations"] = std::to_string(cfg.num_perturbations);
    r.hyperparams["sigma"] = std::to_string(cfg.sigma);
    r.hyperparams["seed"] = std::to_string(cfg.seed);
    if (bottom) r.hyperparams["negated"] = cfg.negate_pgu ? "true" : "false";
    r.dataset_id = d.id();
    r.model_descriptor = m.descriptor();
    if (!E.empty()) r.explainer_tag = E.front().explainer_tag;
    return r;
}

}  // namespace

void PerturbConfig::validate(std::size_t feature_count) const {
    if (num_perturbations < 1) throw sens_error("num_perturbations must be at least 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw sens_error("sigma must be positive");
    if (n > feature_count) throw sens_error("n exceeds feature count");
}

double perturbation_gap(const Predictor& m, std::span<const double> x, std::span<const std::size_t> features,
                        const PerturbConfig& cfg, std::size_t row) {
    const double base = m.predict_proba(x);
    const std::uint64_t key = derive_seed(cfg.seed, "metrics_sensitivity", row);
    const std::uint64_t width = x.size();
    std::vector<double> z(x.begin(), x.end());
    double total = 0.0;
    for (std::size_t j = 0; j < cfg.num_perturbations; ++j) {
        for (std::size_t f : features) z[f] = x[f] + cfg.sigma * normal_at(key, j * width + f);
        total += std::abs(m.predict_proba(z) - base);
    }
    return total / static_cast<double>(cfg.num_perturbations);
}

double pgi(const Predictor& m, std::span<const double> x, std::span<const double> e, const PerturbConfig& cfg,
           std::size_t row) {
    check_explanation(x, e, m);
    cfg.validate(x.size());
    const auto top = top_n_features(e, cfg.n);
    return perturbation_gap(m, x, top, cfg, row);
}

double pgu(const Predictor& m, std::span<const double> x, std::span<const double> e, const PerturbConfig& cfg,
           std::size_t row) {
    check_explanation(x, e, m);
    cfg.validate(x.size());
    const auto bottom = bottom_n_features(e, cfg.n);
    const double gap = perturbation_gap(m, x, bottom, cfg, row);
    return cfg.negate_pgu ? -gap : gap;
}

QualityReport pgi_report(const Predictor& m, const Dataset& d, const std::vector<Explanation>& E,
                         const PerturbConfig& cfg, std::size_t jobs) {
    return dataset_report("pgi", false, m, d, E, cfg, jobs);
}

QualityReport pgu_report(const Predictor& m, const Dataset& d, const std::vector<Explanation>& E,
                         const PerturbConfig& cfg, std::size_t jobs) {
    return dataset_report("pgu", true, m, d, E, cfg, jobs);
}

}  // namespace axebench
