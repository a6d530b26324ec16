#include "axebench/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "axebench/data.hpp"
#include "axebench/explainers.hpp"
#include "axebench/metrics_reference.hpp"
#include "axebench/support.hpp"

namespace axebench {

namespace {

Error exp_error(const std::string& what) { return Error("experiments", what); }

struct MetricName {
    MetricKind kind;
    const char* name;
};

constexpr MetricName kMetricNames[] = {
    {MetricKind::FA, "fa"},   {MetricKind::RA, "ra"},   {MetricKind::SA, "sa"},
    {MetricKind::SRA, "sra"}, {MetricKind::RC, "rc"},   {MetricKind::PRA, "pra"},
    {MetricKind::PGI, "pgi"}, {MetricKind::PGU, "pgu"}, {MetricKind::AXE, "axe"},
};

std::optional<double> ground_truth_value(MetricKind kind, const GroundTruthPair& p) {
    switch (kind) {
        case MetricKind::FA: return feature_agreement(p);
        case MetricKind::RA: return rank_agreement(p);
        case MetricKind::SA: return sign_agreement(p);
        case MetricKind::SRA: return signed_rank_agreement(p);
        case MetricKind::RC: return rank_correlation(p);
        case MetricKind::PRA: return pairwise_rank_agreement(p);
        default: throw exp_error("not a ground-truth metric: " + to_string(kind));
    }
}

std::string fmt(double v, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

std::string to_string(MetricKind kind) {
    for (const auto& m : kMetricNames)
        if (m.kind == kind) return m.name;
    return "unknown";
}

MetricKind parse_metric_kind(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& m : kMetricNames)
        if (lower == m.name) return m.kind;
    throw exp_error("unknown metric '" + name + "'");
}

const std::vector<MetricKind>& all_metric_kinds() {
    static const std::vector<MetricKind> kinds = [] {
        std::vector<MetricKind> v;
        for (const auto& m : kMetricNames) v.push_back(m.kind);
        return v;
    }();
    return kinds;
}

bool is_ground_truth(MetricKind kind) {
    return kind != MetricKind::PGI && kind != MetricKind::PGU && kind != MetricKind::AXE;
}

QualityReport evaluate_metric(const MetricSpec& spec, const EvaluationInputs& in) {
    if (!in.data) throw exp_error("no dataset supplied");
    if (!in.explanations) throw exp_error("no explanations supplied");
    const Dataset& d = *in.data;
    const auto& E = *in.explanations;

    if (is_ground_truth(spec.kind)) {
        if (!in.reference || in.reference->empty())
            throw exp_error("ground-truth metric " + to_string(spec.kind) + " needs reference explanations");
        const auto& R = *in.reference;
        if (R.size() != 1 && R.size() != E.size())
            throw exp_error("length mismatch: " + std::to_string(R.size()) + " reference explanations for " +
                            std::to_string(E.size()) + " explanations");
        std::vector<std::optional<double>> q(E.size());
        for (std::size_t i = 0; i < E.size(); ++i) {
            const auto& ref = R.size() == 1 ? R.front() : R[i];
            q[i] = ground_truth_value(spec.kind, GroundTruthPair(E[i], ref, spec.n));
        }
        auto r = make_report(to_string(spec.kind), std::move(q));
        r.hyperparams["n"] = std::to_string(spec.n);
        r.dataset_id = d.id();
        if (!E.empty()) r.explainer_tag = E.front().explainer_tag;
        return r;
    }

    if (spec.kind == MetricKind::AXE) {
        std::vector<int> preds;
        if (in.y_preds) preds = *in.y_preds;
        else if (in.model) preds = predict_all(*in.model, d);
        else throw exp_error("axe needs model predictions or a model");
        auto r = axe_quality(d, preds, E, spec.axe(), in.jobs);
        if (in.model) r.model_descriptor = in.model->descriptor();
        return r;
    }

    if (!in.model) throw exp_error(to_string(spec.kind) + " needs a model");
    return spec.kind == MetricKind::PGI ? pgi_report(*in.model, d, E, spec.perturb(), in.jobs)
                                        : pgu_report(*in.model, d, E, spec.perturb(), in.jobs);
}

nlohmann::json report_to_json(const QualityReport& r) {
    nlohmann::json per_point = nlohmann::json::array();
    for (const auto& q : r.per_point_q) per_point.push_back(q ? nlohmann::json(*q) : nlohmann::json(nullptr));
    return {{"schema_version", kSchemaVersion},
            {"metric", r.metric_name},
            {"hyperparams", r.hyperparams},
            {"dataset_id", r.dataset_id},
            {"model_descriptor", r.model_descriptor},
            {"explainer_tag", r.explainer_tag},
            {"aggregate_q", r.aggregate_q ? nlohmann::json(*r.aggregate_q) : nlohmann::json("undefined")},
            {"undefined_count", r.undefined_count()},
            {"per_point_q", std::move(per_point)}};
}

QualityReport report_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kSchemaVersion) throw exp_error("unsupported report schema version");
    std::vector<std::optional<double>> q;
    for (const auto& v : j.at("per_point_q")) q.push_back(v.is_null() ? std::nullopt : std::optional(v.get<double>()));
    auto r = make_report(j.at("metric").get<std::string>(), std::move(q));
    r.hyperparams = j.at("hyperparams").get<std::map<std::string, std::string>>();
    r.dataset_id = j.value("dataset_id", std::string{});
    r.model_descriptor = j.value("model_descriptor", std::string{});
    r.explainer_tag = j.value("explainer_tag", std::string{});
    return r;
}

// ---------------------------------------------------------------------------
// Region grid.

void RegionGridSpec::validate() const {
    if (resolution < 3) throw exp_error("grid resolution must be at least 3");
    if (!(lo < hi)) throw exp_error("grid range must satisfy lo < hi");
    if (n > 2) throw exp_error("n exceeds feature count");
    for (auto m : metrics)
        if (!is_ground_truth(m)) throw exp_error("region grid supports ground-truth metrics only, got " + to_string(m));
}

double RegionGridSpec::axis(std::size_t j) const {
    return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(resolution - 1);
}

const RegionGrid& RegionGridResult::grid(MetricKind kind) const {
    for (const auto& g : grids)
        if (g.metric == kind) return g;
    throw exp_error("grid for " + to_string(kind) + " was not computed");
}

RegionGridResult run_region_grid(const RegionGridSpec& spec, std::size_t jobs) {
    spec.validate();
    const std::size_t res = spec.resolution;
    RegionGridResult out{spec, {}};
    for (auto m : spec.metrics) out.grids.push_back({m, std::vector<std::optional<double>>(res * res), {}, 0});

    const std::array<double, 2> e_star = spec.e_star;
    parallel_for(
        res,
        [&](std::size_t a) {
            for (std::size_t b = 0; b < res; ++b) {
                const std::array<double, 2> e{spec.axis(a), spec.axis(b)};
                const GroundTruthPair p(e, e_star, spec.n);
                for (auto& g : out.grids) g.values[a * res + b] = ground_truth_value(g.metric, p);
            }
        },
        jobs);

    for (auto& g : out.grids) {
        std::set<double> distinct;
        for (const auto& v : g.values) {
            if (v) distinct.insert(*v);
            else ++g.undefined;
        }
        g.distinct.assign(distinct.begin(), distinct.end());
    }
    return out;
}

void write_region_grid_tsv(const std::filesystem::path& path, const RegionGridResult& result, const RegionGrid& grid) {
    std::ofstream out(path);
    if (!out) throw exp_error("cannot write " + path.string());
    out.precision(17);
    const auto& spec = result.spec;
    const std::string name = to_string(grid.metric);
    out << "i1\ti2\tmetric\tq\n";
    for (std::size_t a = 0; a < spec.resolution; ++a)
        for (std::size_t b = 0; b < spec.resolution; ++b) {
            out << spec.axis(a) << '\t' << spec.axis(b) << '\t' << name << '\t';
            const auto& v = grid.values[a * spec.resolution + b];
            if (v) out << *v;
            else out << "undefined";
            out << '\n';
        }
}

nlohmann::json region_summary_json(const RegionGridResult& result) {
    const auto& spec = result.spec;
    auto region_of = [](double i1, double i2) {
        auto sgn = [](double v) { return v > 0 ? "+" : (v < 0 ? "-" : "0"); };
        const double a = std::abs(i1), b = std::abs(i2);
        const char* order = a > b ? "|i1|>|i2|" : (a < b ? "|i1|<|i2|" : "|i1|=|i2|");
        return std::string("i1") + sgn(i1) + ",i2" + sgn(i2) + "," + order;
    };
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& g : result.grids) {
        std::map<std::string, std::set<double>> regions;
        std::map<std::string, std::size_t> region_undefined;
        for (std::size_t a = 0; a < spec.resolution; ++a)
            for (std::size_t b = 0; b < spec.resolution; ++b) {
                const auto key = region_of(spec.axis(a), spec.axis(b));
                const auto& v = g.values[a * spec.resolution + b];
                if (v) regions[key].insert(*v);
                else ++region_undefined[key];
            }
        nlohmann::json rj = nlohmann::json::object();
        for (const auto& [key, values] : regions) rj[key] = std::vector<double>(values.begin(), values.end());
        metrics[to_string(g.metric)] = {{"distinct_values", g.distinct},
                                        {"undefined_cells", g.undefined},
                                        {"regions", std::move(rj)},
                                        {"undefined_by_region", region_undefined}};
    }
    return {{"schema_version", kSchemaVersion},
            {"e_star", spec.e_star},
            {"range", {spec.lo, spec.hi}},
            {"resolution", spec.resolution},
            {"n", spec.n},
            {"metrics", std::move(metrics)}};
}

// ---------------------------------------------------------------------------
// Attack.

AttackSpec attack_preset(const std::string& dataset_name, std::uint64_t seed) {
    AttackSpec s;
    s.dataset_name = dataset_name;
    s.seed = seed;
    if (dataset_name == "german_credit") {
        s.protected_column = "Gender";
        s.positive_above = true;
        s.foil_positive_above = true;
        s.models = {{"m_L1", PerturbationKind::Gaussian, {"LoanRateAsPercentOfIncome"}},
                    {"m_S1", PerturbationKind::Substitution, {"LoanRateAsPercentOfIncome"}}};
        return s;
    }
    if (dataset_name == "compas" || dataset_name == "communities_crime") {
        const bool compas = dataset_name == "compas";
        s.protected_column = compas ? "race" : "racePctWhite";
        s.positive_above = !compas;
        s.foil_positive_above = false;
        s.appended_foils = {"unrelated_column_one", "unrelated_column_two"};
        const std::vector<std::string> one{"unrelated_column_one"};
        const std::vector<std::string> two{"unrelated_column_one", "unrelated_column_two"};
        s.models = {{"m_L1", PerturbationKind::Gaussian, one},
                    {"m_S1", PerturbationKind::Substitution, one},
                    {"m_L2", PerturbationKind::Gaussian, two},
                    {"m_S2", PerturbationKind::Substitution, two}};
        return s;
    }
    throw exp_error("unknown attack preset '" + dataset_name + "'");
}

std::vector<std::size_t> append_unrelated_columns(Dataset& d, const std::vector<std::string>& names,
                                                  std::uint64_t seed) {
    std::vector<std::size_t> indices;
    const auto& labels = d.labels();
    for (std::size_t f = 0; f < names.size(); ++f) {
        if (d.feature_index(names[f])) throw exp_error("column '" + names[f] + "' already exists");
        std::vector<double> column(d.rows());
        bool accepted = false;
        for (std::size_t attempt = 0; attempt < 100 && !accepted; ++attempt) {
            Rng rng = make_rng(seed, "experiments.unrelated", f * 1000 + attempt);
            for (auto& v : column) v = static_cast<double>(uniform_index(rng, 2));
            const double mean = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
            if (mean == 0.0 || mean == 1.0) continue;
            if (!labels) {
                accepted = true;
                break;
            }
            double ml = 0;
            for (int y : *labels) ml += y;
            ml /= static_cast<double>(labels->size());
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t i = 0; i < column.size(); ++i) {
                const double dx = column[i] - mean, dy = (*labels)[i] - ml;
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            accepted = syy == 0.0 || std::abs(sxy / std::sqrt(sxx * syy)) < 0.15;
        }
        if (!accepted) throw exp_error("could not draw an unrelated column for '" + names[f] + "'");
        indices.push_back(d.append_column(names[f], column));
        d.add_note("appended seeded unrelated binary column '" + names[f] + "' as a foil");
    }
    return indices;
}

std::vector<std::size_t> AttackBundle::other_indices() const {
    std::set<std::size_t> excluded{protected_index};
    for (const auto& m : models) excluded.insert(m.foil_indices.begin(), m.foil_indices.end());
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < data.cols(); ++j)
        if (!excluded.count(j)) out.push_back(j);
    return out;
}

AttackBundle build_attack_bundle(const Dataset& d, const AttackSpec& spec) {
    if (spec.models.empty()) throw exp_error("attack needs at least one model");
    AttackBundle b;
    b.data = d;
    b.perturbation_std = spec.perturbation_std;
    b.seed = spec.seed;

    std::optional<std::size_t> p =
        spec.protected_column.empty() ? d.protected_index() : d.feature_index(spec.protected_column);
    if (!p)
        throw exp_error(spec.protected_column.empty()
                            ? "dataset '" + d.id() + "' has no protected column"
                            : "dataset '" + d.id() + "' has no protected column '" + spec.protected_column + "'");
    b.protected_index = *p;
    b.data.set_protected_index(p);
    append_unrelated_columns(b.data, spec.appended_foils, spec.seed);
    b.dataset_id = b.data.id();

    std::set<std::size_t> all_foils;
    std::vector<std::vector<std::size_t>> model_foils;
    for (const auto& m : spec.models) {
        std::vector<std::size_t> idx;
        for (const auto& name : m.foil_columns) {
            const auto f = b.data.feature_index(name);
            if (!f) throw exp_error("foil column '" + name + "' not found");
            idx.push_back(*f);
            all_foils.insert(*f);
        }
        model_foils.push_back(std::move(idx));
    }
    b.data.set_foil_indices({all_foils.begin(), all_foils.end()});

    const RuleModelSpec biased_spec{b.protected_index, 0.0, spec.positive_above};
    b.biased = make_rule_predictor(biased_spec, b.data.cols());

    // One detector per perturbation kind, shared by the one- and two-foil models.
    std::map<PerturbationKind, OodDetector> detectors;
    for (const auto& m : spec.models)
        if (!detectors.count(m.perturbation))
            detectors.emplace(m.perturbation,
                              train_ood_detector(b.data, spec.perturbation_std,
                                                 derive_seed(spec.seed, "experiments.detector",
                                                             static_cast<std::uint64_t>(m.perturbation)),
                                                 m.perturbation, spec.detector_params, spec.perturbation_copies));

    for (std::size_t i = 0; i < spec.models.size(); ++i) {
        const auto& m = spec.models[i];
        ScaffoldSpec s;
        s.biased_model = biased_spec;
        for (std::size_t f : model_foils[i]) s.foil_models.push_back({f, 0.0, spec.foil_positive_above});
        s.perturbation = m.perturbation;
        s.perturbation_std = spec.perturbation_std;
        s.perturbation_copies = spec.perturbation_copies;
        s.seed = spec.seed;
        s.accuracy_floor = spec.accuracy_floor;
        s.detector_params = spec.detector_params;
        s.detector = detectors.at(m.perturbation);
        AttackModel am;
        am.name = m.name;
        am.model = build_scaffold(b.data, s);
        am.foil_indices = model_foils[i];
        am.agreement = agreement_rate(*am.model, *b.biased, b.data);
        b.models.push_back(std::move(am));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Detection.

void VerdictRow::recompute() {
    pass_phi = q.rho > q.phi;
    if (q.psi) pass_psi = q.rho > *q.psi;
    else pass_psi.reset();
    pass = pass_phi && pass_psi.value_or(true);
}

double VerdictRow::margin() const {
    double m = q.rho - q.phi;
    if (q.psi) m = std::min(m, q.rho - *q.psi);
    return m;
}

std::size_t DetectionVerdict::failures(const std::string& metric_prefix) const {
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.metric.rfind(metric_prefix, 0) == 0 && !r.pass) ++n;
    return n;
}

namespace {

/// Dataset-mean quality for one-hot explanation sets, memoised per feature.
class SetScorer {
public:
    SetScorer(const Dataset& d, const Predictor& m, const DetectionConfig& cfg)
        : d_(d), m_(m), cfg_(cfg), y_preds_(predict_all(m, d)) {}

    double axe(std::size_t feature, std::size_t k) {
        const auto key = std::make_pair(feature, k);
        if (auto it = axe_.find(key); it != axe_.end()) return it->second;
        const auto E = make_manual_explanations(d_, feature);
        const double q = *axe_quality(d_, y_preds_, E, {cfg_.n, k, cfg_.include_self}, cfg_.jobs).aggregate_q;
        return axe_[key] = q;
    }

    double pgi(std::size_t feature) { return gap(top_n_features(one_hot(feature), cfg_.perturb.n)); }

    double pgu(std::size_t feature) {
        const double g = gap(bottom_n_features(one_hot(feature), cfg_.perturb.n));
        return cfg_.perturb.negate_pgu ? -g : g;
    }

private:
    std::vector<double> one_hot(std::size_t feature) const {
        std::vector<double> e(d_.cols(), 0.0);
        e[feature] = 1.0;
        return e;
    }

    // Every row of a one-hot set perturbs the same index set, and draws depend
    // only on (seed, row), so the mean gap is shared by all sets with that index set.
    double gap(const std::vector<std::size_t>& features) {
        if (auto it = gaps_.find(features); it != gaps_.end()) return it->second;
        std::vector<double> per_row(d_.rows());
        parallel_for(
            d_.rows(), [&](std::size_t i) { per_row[i] = perturbation_gap(m_, d_.row(i), features, cfg_.perturb, i); },
            cfg_.jobs);
        return gaps_[features] = aggregate_quality(per_row);
    }

    const Dataset& d_;
    const Predictor& m_;
    const DetectionConfig& cfg_;
    std::vector<int> y_preds_;
    std::map<std::pair<std::size_t, std::size_t>, double> axe_;
    std::map<std::vector<std::size_t>, double> gaps_;
};

template <typename Score>
VerdictRow make_row(const AttackBundle& b, const AttackModel& am, std::string metric, bool include_other,
                    Score score) {
    VerdictRow r;
    r.dataset_id = b.dataset_id;
    r.model_name = am.name;
    r.metric = std::move(metric);
    r.q.rho = score(b.protected_index);
    r.q.phi = score(am.foil_indices.at(0));
    if (am.foil_indices.size() > 1) r.q.psi = score(am.foil_indices[1]);
    if (include_other) {
        const auto others = b.other_indices();
        if (!others.empty()) {
            double total = 0.0;
            for (std::size_t f : others) total += score(f);
            r.q.omega = total / static_cast<double>(others.size());
        }
    }
    r.recompute();
    return r;
}

}  // namespace

DetectionVerdict run_fairwash_detection(const AttackBundle& bundle, const DetectionConfig& cfg) {
    if (cfg.ks.empty()) throw exp_error("detection needs at least one k");
    cfg.perturb.validate(bundle.data.cols());
    DetectionVerdict v;
    for (const auto& am : bundle.models) {
        if (am.foil_indices.empty()) throw exp_error("model " + am.name + " has no foil");
        if (am.foil_indices.size() == 2 && am.foil_indices[0] == am.foil_indices[1])
            throw exp_error("model " + am.name + " needs a distinct second foil for E_psi");
        SetScorer scorer(bundle.data, *am.model, cfg);
        for (std::size_t k : cfg.ks)
            v.rows.push_back(make_row(bundle, am, "axe(k=" + std::to_string(k) + ")", cfg.include_other,
                                      [&](std::size_t f) { return scorer.axe(f, k); }));
        v.rows.push_back(
            make_row(bundle, am, "pgi", cfg.include_other, [&](std::size_t f) { return scorer.pgi(f); }));
        v.rows.push_back(make_row(bundle, am, cfg.perturb.negate_pgu ? "-pgu" : "pgu", cfg.include_other,
                                  [&](std::size_t f) { return scorer.pgu(f); }));
    }
    return v;
}

nlohmann::json verdict_to_json(const DetectionVerdict& v) {
    auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : v.rows)
        rows.push_back({{"dataset", r.dataset_id},
                        {"model", r.model_name},
                        {"metric", r.metric},
                        {"q_rho", r.q.rho},
                        {"q_phi", r.q.phi},
                        {"q_psi", opt(r.q.psi)},
                        {"q_omega", opt(r.q.omega)},
                        {"pass_phi", r.pass_phi},
                        {"pass_psi", r.pass_psi ? nlohmann::json(*r.pass_psi) : nlohmann::json(nullptr)},
                        {"pass", r.pass}});
    return {{"schema_version", kSchemaVersion}, {"rows", std::move(rows)}};
}

DetectionVerdict verdict_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kSchemaVersion) throw exp_error("unsupported verdict schema version");
    auto opt = [](const nlohmann::json& x) { return x.is_null() ? std::nullopt : std::optional(x.get<double>()); };
    DetectionVerdict v;
    for (const auto& r : j.at("rows")) {
        VerdictRow row;
        row.dataset_id = r.at("dataset").get<std::string>();
        row.model_name = r.at("model").get<std::string>();
        row.metric = r.at("metric").get<std::string>();
        row.q.rho = r.at("q_rho").get<double>();
        row.q.phi = r.at("q_phi").get<double>();
        row.q.psi = opt(r.at("q_psi"));
        row.q.omega = opt(r.at("q_omega"));
        row.pass_phi = r.at("pass_phi").get<bool>();
        if (!r.at("pass_psi").is_null()) row.pass_psi = r.at("pass_psi").get<bool>();
        row.pass = r.at("pass").get<bool>();
        v.rows.push_back(std::move(row));
    }
    return v;
}

std::string verdict_table(const DetectionVerdict& v) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-6s %-10s %8s %8s %8s %8s  %s\n", "dataset", "model", "metric",
                  "E_rho", "E_phi", "E_psi", "E_omega", "rho>phi,psi");
    out << line;
    auto cell = [](const std::optional<double>& x) { return x ? fmt(*x) : std::string("na"); };
    for (const auto& r : v.rows) {
        std::snprintf(line, sizeof line, "%-20s %-6s %-10s %8s %8s %8s %8s  %s\n", r.dataset_id.c_str(),
                      r.model_name.c_str(), r.metric.c_str(), fmt(r.q.rho).c_str(), fmt(r.q.phi).c_str(),
                      cell(r.q.psi).c_str(), cell(r.q.omega).c_str(), r.pass ? "pass" : "FAIL");
        out << line;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Principles.

std::string to_string(Principle p) {
    switch (p) {
        case Principle::LocalContextualization: return "P1-local-contextualization";
        case Principle::ModelRelativism: return "P2-model-relativism";
        case Principle::OnManifold: return "P3-on-manifold";
    }
    return "unknown";
}

std::string to_string(PrincipleOutcome o) {
    switch (o) {
        case PrincipleOutcome::Pass: return "pass";
        case PrincipleOutcome::Fail: return "fail";
        case PrincipleOutcome::NotApplicable: return "not-applicable";
    }
    return "unknown";
}

OnManifoldPredictor::OnManifoldPredictor(PredictorPtr inner, const Dataset& d, double off_manifold_proba)
    : inner_(std::move(inner)), off_(off_manifold_proba) {
    if (inner_->input_dim() != d.cols()) throw exp_error("dimension mismatch between model and dataset");
    for (std::size_t i = 0; i < d.rows(); ++i) rows_.emplace_back(d.row(i).begin(), d.row(i).end());
    std::sort(rows_.begin(), rows_.end());
}

double OnManifoldPredictor::predict_proba(std::span<const double> x) const {
    const auto it = std::lower_bound(rows_.begin(), rows_.end(), x, [](const std::vector<double>& r, auto q) {
        return std::lexicographical_compare(r.begin(), r.end(), q.begin(), q.end());
    });
    if (it != rows_.end() && std::equal(it->begin(), it->end(), x.begin(), x.end())) return inner_->predict_proba(x);
    return off_;
}

std::string OnManifoldPredictor::descriptor() const {
    return "on-manifold(" + inner_->descriptor() + ", off=" + fmt(off_, 2) + ")";
}

PrincipleFixtures make_principle_fixtures(std::uint64_t seed) {
    PrincipleFixtures fx;
    fx.seed = seed;
    SyntheticSpec s;
    s.kind = GeneratorKind::ThresholdRule;
    s.rows = 60;
    s.cols = 3;
    s.seed = seed;
    fx.data = generate_synthetic(s);
    fx.model_a = make_linear_predictor({{3.0, 0.5, 0.4}, 0.0}, 3);
    fx.model_b = make_linear_predictor({{3.0, 0.5, 0.4}, 0.6}, 3);
    fx.model_c = std::make_shared<OnManifoldPredictor>(fx.model_a, fx.data, 0.5);
    fx.explanation = {0.2, 0.9, 0.1};
    fx.reference = {0.7, 0.3, 0.0};
    return fx;
}

PrincipleResult run_principle_suite(MetricKind metric, const PrincipleFixtures& fx, const MetricSpec& base) {
    MetricSpec spec = base;
    spec.kind = metric;
    const Dataset& d = fx.data;
    std::vector<Explanation> E(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) E[i] = {fx.explanation, i, "fixed", {}};
    const std::vector<Explanation> R{{fx.reference, 0, "reference", {}}};

    auto run = [&](const PredictorPtr& model) {
        EvaluationInputs in;
        in.data = &d;
        in.model = model.get();
        in.explanations = &E;
        in.reference = &R;
        return evaluate_metric(spec, in);
    };
    auto same = [](const QualityReport& a, const QualityReport& b) {
        return a.per_point_q == b.per_point_q && a.aggregate_q == b.aggregate_q;
    };
    auto agg = [](const QualityReport& r) {
        return r.aggregate_q ? nlohmann::json(*r.aggregate_q) : nlohmann::json("undefined");
    };
    const std::string fixture = "threshold-rule rows=60 cols=3 seed=" + std::to_string(fx.seed);

    PrincipleResult result;
    result.metric = metric;
    const auto ra = run(fx.model_a);

    {
        auto& w = result.witnesses[0];
        w.principle = Principle::LocalContextualization;
        std::optional<std::size_t> other;
        for (std::size_t i = 1; i < ra.per_point_q.size() && !other; ++i)
            if (ra.per_point_q[i] != ra.per_point_q[0]) other = i;
        w.outcome = other ? PrincipleOutcome::Pass : PrincipleOutcome::Fail;
        w.evidence = {{"fixture", fixture}, {"model", fx.model_a->descriptor()}, {"explanation", fx.explanation}};
        auto show = [](const std::optional<double>& q) { return q ? nlohmann::json(*q) : nlohmann::json(nullptr); };
        if (other)
            w.evidence["rows"] = {{{"row", 0}, {"q", show(ra.per_point_q[0])}},
                                  {{"row", *other}, {"q", show(ra.per_point_q[*other])}}};
        else
            w.evidence["constant_q"] = show(ra.per_point_q.front());
    }
    {
        auto& w = result.witnesses[1];
        w.principle = Principle::ModelRelativism;
        const auto rb = run(fx.model_b);
        const auto ya = predict_all(*fx.model_a, d), yb = predict_all(*fx.model_b, d);
        std::size_t differing = 0;
        for (std::size_t i = 0; i < ya.size(); ++i) differing += ya[i] != yb[i] ? 1 : 0;
        w.outcome = same(ra, rb) ? PrincipleOutcome::Fail : PrincipleOutcome::Pass;
        w.evidence = {{"fixture", fixture},
                      {"model_a", fx.model_a->descriptor()},
                      {"model_b", fx.model_b->descriptor()},
                      {"rows_where_predictions_differ", differing},
                      {"aggregate_a", agg(ra)},
                      {"aggregate_b", agg(rb)}};
    }
    {
        auto& w = result.witnesses[2];
        w.principle = Principle::OnManifold;
        const auto rc = run(fx.model_c);
        double max_row_gap = 0.0;
        for (std::size_t i = 0; i < d.rows(); ++i)
            max_row_gap =
                std::max(max_row_gap, std::abs(fx.model_a->predict_proba(d.row(i)) - fx.model_c->predict_proba(d.row(i))));
        w.outcome = same(ra, rc) ? PrincipleOutcome::Pass : PrincipleOutcome::Fail;
        w.evidence = {{"fixture", fixture},
                      {"model_a", fx.model_a->descriptor()},
                      {"model_c", fx.model_c->descriptor()},
                      {"max_on_manifold_proba_gap", max_row_gap},
                      {"aggregate_a", agg(ra)},
                      {"aggregate_c", agg(rc)}};
    }
    return result;
}

nlohmann::json principles_to_json(const std::vector<PrincipleResult>& results, const PrincipleFixtures& fx) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json entry{{"metric", to_string(r.metric)}};
        for (const auto& w : r.witnesses)
            entry[to_string(w.principle)] = {{"outcome", to_string(w.outcome)}, {"evidence", w.evidence}};
        rows.push_back(std::move(entry));
    }
    return {{"schema_version", kSchemaVersion},
            {"fixtures",
             {{"seed", fx.seed},
              {"dataset", fx.data.id()},
              {"rows", fx.data.rows()},
              {"model_a", fx.model_a->descriptor()},
              {"model_b", fx.model_b->descriptor()},
              {"model_c", fx.model_c->descriptor()},
              {"explanation", fx.explanation},
              {"reference", fx.reference}}},
            {"results", std::move(rows)}};
}

}  // namespace axebench
