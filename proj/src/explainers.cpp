#include "axebench/explainers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>

#include "axebench/data.hpp"
#include "axebench/support.hpp"

namespace axebench {

namespace {

Error explainer_error(const std::string& what) { return Error("explainers", what); }

std::vector<double> require_gradient(const Predictor& m, std::span<const double> x) {
    auto g = m.gradient(x);
    if (!g) throw explainer_error("gradient not supported by model '" + m.descriptor() + "'");
    return std::move(*g);
}

Explanation make_explanation(std::vector<double> importances, std::size_t row, std::string tag) {
    for (double v : importances)
        if (!std::isfinite(v)) throw explainer_error("explainer produced a non-finite importance");
    return Explanation{std::move(importances), row, std::move(tag), {}};
}

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

}  // namespace

std::string to_string(ExplainerKind kind) {
    switch (kind) {
        case ExplainerKind::Gradient: return "gradient";
        case ExplainerKind::IntegratedGradients: return "integrated-gradients";
        case ExplainerKind::LocalSurrogate: return "local-surrogate";
        case ExplainerKind::KernelShapley: return "kernel-shapley";
        case ExplainerKind::Manual: return "manual";
    }
    return "unknown";
}

ExplainerKind parse_explainer_kind(const std::string& name) {
    for (auto k : {ExplainerKind::Gradient, ExplainerKind::IntegratedGradients, ExplainerKind::LocalSurrogate,
                   ExplainerKind::KernelShapley, ExplainerKind::Manual})
        if (to_string(k) == name) return k;
    throw explainer_error("unknown explainer '" + name + "'");
}

void ExplainerConfig::validate(std::size_t feature_count) const {
    if (samples < 1) throw explainer_error("samples must be at least 1");
    if (ig_steps < 1) throw explainer_error("ig_steps must be at least 1");
    if (!baseline.empty() && baseline.size() != feature_count)
        throw explainer_error("baseline length does not match feature count");
    if (!(sigma_perturb > 0.0)) throw explainer_error("sigma_perturb must be positive");
    if (ridge < 0.0) throw explainer_error("ridge must be non-negative");
    if (kind == ExplainerKind::LocalSurrogate && samples < feature_count + 2)
        throw explainer_error("local surrogate needs at least N + 2 samples");
    if (kind == ExplainerKind::KernelShapley && samples < 2 * feature_count)
        throw explainer_error("kernel Shapley needs at least 2N samples");
    if (kind == ExplainerKind::KernelShapley && background_rows < 1)
        throw explainer_error("kernel Shapley needs background rows");
}

Explanation explain_gradient(const Predictor& m, std::span<const double> x, std::size_t row) {
    return make_explanation(require_gradient(m, x), row, "gradient");
}

Explanation explain_integrated_gradients(const Predictor& m, std::span<const double> x, const ExplainerConfig& cfg,
                                         std::size_t row) {
    cfg.validate(x.size());
    std::vector<double> base = cfg.baseline.empty() ? std::vector<double>(x.size(), 0.0) : cfg.baseline;
    std::vector<double> sum(x.size(), 0.0), point(x.size());
    for (std::size_t s = 0; s < cfg.ig_steps; ++s) {
        const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(cfg.ig_steps);
        for (std::size_t j = 0; j < x.size(); ++j) point[j] = base[j] + t * (x[j] - base[j]);
        const auto g = require_gradient(m, point);
        for (std::size_t j = 0; j < x.size(); ++j) sum[j] += g[j];
    }
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] = (x[j] - base[j]) * sum[j] / static_cast<double>(cfg.ig_steps);
    return make_explanation(std::move(sum), row, "integrated-gradients");
}

Explanation explain_local_surrogate(const Predictor& m, std::span<const double> x, const Dataset& d,
                                    const ExplainerConfig& cfg, std::size_t row) {
    const std::size_t p = x.size();
    if (p != d.cols()) throw explainer_error("datapoint width does not match dataset");
    ExplainerConfig checked = cfg;
    checked.kind = ExplainerKind::LocalSurrogate;
    checked.validate(p);
    const double width = cfg.kernel_width > 0 ? cfg.kernel_width : 0.75 * std::sqrt(static_cast<double>(p));

    Rng rng = make_rng(cfg.seed, "explainers.local-surrogate", row);
    const std::size_t n = cfg.samples;
    Eigen::MatrixXd offsets(n, p);
    Eigen::VectorXd target(n), weight(n);
    std::vector<double> z(p);
    for (std::size_t s = 0; s < n; ++s) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double delta = cfg.sigma_perturb * standard_normal(rng);
            offsets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = delta;
            z[j] = x[j] + delta;
            dist2 += delta * delta;
        }
        target(static_cast<Eigen::Index>(s)) = m.predict_proba(z);
        weight(static_cast<Eigen::Index>(s)) = std::exp(-dist2 / (width * width));
    }
    // Weighted centring absorbs the (unpenalized) intercept.
    const double wsum = weight.sum();
    const Eigen::RowVectorXd mean_offset = (weight.asDiagonal() * offsets).colwise().sum() / wsum;
    const double mean_target = weight.dot(target) / wsum;
    const Eigen::MatrixXd centred = offsets.rowwise() - mean_offset;
    const Eigen::VectorXd centred_target = target.array() - mean_target;
    Eigen::MatrixXd gram = centred.transpose() * weight.asDiagonal() * centred;
    const double floor = cfg.ridge;
    const bool degenerate = gram.diagonal().minCoeff() < 10.0 * floor;
    gram.diagonal().array() += floor;
    const Eigen::VectorXd slopes = gram.ldlt().solve(centred.transpose() * weight.asDiagonal() * centred_target);

    Explanation e = make_explanation(std::vector<double>(slopes.data(), slopes.data() + p), row, "local-surrogate");
    if (degenerate) e.diagnostics = "ridge floor dominates: perturbations carry no local variation";
    return e;
}

Explanation explain_kernel_shapley(const Predictor& m, std::span<const double> x, const Dataset& d,
                                   const ExplainerConfig& cfg, std::size_t row) {
    const std::size_t p = x.size();
    if (p != d.cols()) throw explainer_error("datapoint width does not match dataset");
    ExplainerConfig checked = cfg;
    checked.kind = ExplainerKind::KernelShapley;
    checked.validate(p);

    // Background rows: a seeded sample shared by every explained row.
    std::vector<std::size_t> background(d.rows());
    for (std::size_t i = 0; i < background.size(); ++i) background[i] = i;
    {
        Rng rng = make_rng(cfg.seed, "explainers.kernel-shapley.background");
        const std::size_t keep = std::min(cfg.background_rows, d.rows());
        for (std::size_t i = 0; i < keep; ++i) std::swap(background[i], background[i + uniform_index(rng, d.rows() - i)]);
        background.resize(keep);
        std::sort(background.begin(), background.end());
    }
    std::vector<double> point(p);
    auto coalition_value = [&](const std::vector<char>& mask) {
        double sum = 0.0;
        for (std::size_t b : background) {
            const auto bg = d.row(b);
            for (std::size_t j = 0; j < p; ++j) point[j] = mask[j] ? x[j] : bg[j];
            sum += m.predict_proba(point);
        }
        return sum / static_cast<double>(background.size());
    };
    const double fx = m.predict_proba(x);
    double base = 0.0;
    for (std::size_t b : background) base += m.predict_proba(d.row(b));
    base /= static_cast<double>(background.size());
    const double delta = fx - base;
    if (p == 1) return make_explanation({delta}, row, "kernel-shapley");

    std::vector<std::vector<char>> masks;
    std::vector<double> weights;
    const bool enumerate = p < 63 && (std::uint64_t{1} << p) - 2 <= cfg.samples;
    if (enumerate) {
        for (std::uint64_t bits = 1; bits + 1 < (std::uint64_t{1} << p); ++bits) {
            std::vector<char> mask(p);
            std::size_t size = 0;
            for (std::size_t j = 0; j < p; ++j) {
                mask[j] = static_cast<char>((bits >> j) & 1U);
                size += static_cast<std::size_t>(mask[j]);
            }
            weights.push_back(static_cast<double>(p - 1) /
                              (binomial(p, size) * static_cast<double>(size) * static_cast<double>(p - size)));
            masks.push_back(std::move(mask));
        }
    } else {
        // Coalition sizes drawn in proportion to their total kernel mass; within a
        // size every subset is equally likely, so each sample carries unit weight.
        std::vector<double> size_mass(p, 0.0);
        double total = 0.0;
        for (std::size_t s = 1; s < p; ++s) {
            size_mass[s] = static_cast<double>(p - 1) / (static_cast<double>(s) * static_cast<double>(p - s));
            total += size_mass[s];
        }
        Rng rng = make_rng(cfg.seed, "explainers.kernel-shapley", row);
        std::vector<std::size_t> order(p);
        for (std::size_t s = 0; s < cfg.samples; ++s) {
            double u = uniform01(rng) * total;
            std::size_t size = 1;
            while (size + 1 < p && u >= size_mass[size]) u -= size_mass[size++];
            for (std::size_t j = 0; j < p; ++j) order[j] = j;
            for (std::size_t j = 0; j < size; ++j) std::swap(order[j], order[j + uniform_index(rng, p - j)]);
            std::vector<char> mask(p, 0);
            for (std::size_t j = 0; j < size; ++j) mask[order[j]] = 1;
            masks.push_back(std::move(mask));
            weights.push_back(1.0);
        }
    }

    // Eliminate the last feature through the efficiency constraint.
    const auto rows = static_cast<Eigen::Index>(masks.size());
    const auto free = static_cast<Eigen::Index>(p - 1);
    Eigen::MatrixXd design(rows, free);
    Eigen::VectorXd target(rows), w(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& mask = masks[static_cast<std::size_t>(r)];
        const double last = mask[p - 1];
        for (Eigen::Index j = 0; j < free; ++j) design(r, j) = mask[static_cast<std::size_t>(j)] - last;
        target(r) = coalition_value(mask) - base - last * delta;
        w(r) = weights[static_cast<std::size_t>(r)];
    }
    Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
    gram.diagonal().array() += cfg.ridge;
    const Eigen::VectorXd phi = gram.ldlt().solve(design.transpose() * w.asDiagonal() * target);
    std::vector<double> values(phi.data(), phi.data() + free);
    values.push_back(delta - phi.sum());
    return make_explanation(std::move(values), row, "kernel-shapley");
}

std::vector<Explanation> make_manual_explanations(const Dataset& d, std::size_t important_index) {
    if (important_index >= d.cols()) throw explainer_error("manual explanation index out of range");
    std::vector<Explanation> out(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        out[i].importances.assign(d.cols(), 0.0);
        out[i].importances[important_index] = 1.0;
        out[i].datapoint_index = i;
        out[i].explainer_tag = "manual:" + d.feature_names()[important_index];
    }
    return out;
}

std::vector<Explanation> explain_dataset(const Predictor& m, const Dataset& d, const ExplainerConfig& cfg,
                                         std::size_t jobs) {
    if (cfg.kind == ExplainerKind::Manual) throw explainer_error("manual explanations need an explicit feature index");
    cfg.validate(d.cols());
    std::vector<Explanation> out(d.rows());
    parallel_for(
        d.rows(),
        [&](std::size_t i) {
            const auto x = d.row(i);
            switch (cfg.kind) {
                case ExplainerKind::Gradient: out[i] = explain_gradient(m, x, i); break;
                case ExplainerKind::IntegratedGradients: out[i] = explain_integrated_gradients(m, x, cfg, i); break;
                case ExplainerKind::LocalSurrogate: out[i] = explain_local_surrogate(m, x, d, cfg, i); break;
                case ExplainerKind::KernelShapley: out[i] = explain_kernel_shapley(m, x, d, cfg, i); break;
                case ExplainerKind::Manual: break;
            }
        },
        jobs);
    return out;
}

void write_explanations_csv(const std::filesystem::path& path, const std::vector<Explanation>& explanations,
                            const std::vector<std::string>& feature_names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw explainer_error("cannot write " + path.string());
    out << "row";
    for (const auto& name : feature_names) out << ',' << name;
    out << '\n' << std::setprecision(17);
    for (const auto& e : explanations) {
        if (e.importances.size() != feature_names.size())
            throw explainer_error("explanation length does not match feature names");
        out << e.datapoint_index;
        for (double v : e.importances) out << ',' << v;
        out << '\n';
    }
}

std::vector<Explanation> read_explanations_csv(const std::filesystem::path& path, const std::string& tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw explainer_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto table = parse_csv(ss.str());
    if (table.empty()) throw explainer_error("empty explanation file");
    const std::size_t width = table.front().size();
    std::vector<Explanation> out;
    for (std::size_t r = 1; r < table.size(); ++r) {
        if (table[r].size() != width) throw explainer_error("ragged explanation file at line " + std::to_string(r + 1));
        Explanation e;
        e.datapoint_index = std::stoul(table[r][0]);
        e.explainer_tag = tag;
        for (std::size_t c = 1; c < width; ++c) e.importances.push_back(std::stod(table[r][c]));
        out.push_back(std::move(e));
    }
    return out;
}

nlohmann::json explanations_to_json(const std::vector<Explanation>& explanations) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : explanations) {
        nlohmann::json j{{"row", e.datapoint_index}, {"explainer", e.explainer_tag}, {"importances", e.importances}};
        if (!e.diagnostics.empty()) j["diagnostics"] = e.diagnostics;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<Explanation> explanations_from_json(const nlohmann::json& j) {
    std::vector<Explanation> out;
    for (const auto& item : j)
        out.push_back({item.at("importances").get<std::vector<double>>(), item.at("row").get<std::size_t>(),
                       item.value("explainer", std::string{}), item.value("diagnostics", std::string{})});
    return out;
}

}  // namespace axebench
