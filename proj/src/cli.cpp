#include "axebench/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "axebench/axe.hpp"
#include "axebench/core.hpp"
#include "axebench/data.hpp"
#include "axebench/experiments.hpp"
#include "axebench/explainers.hpp"
#include "axebench/models.hpp"
#include "axebench/support.hpp"

namespace axebench {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Error cli_error(const std::string& what) { return Error("cli", what); }

const std::set<std::string> kCommands{"evaluate", "explain", "attack", "region-grid", "principles", "report"};
const std::vector<std::string> kPresets{"german_credit", "compas", "communities_crime"};

fs::path data_dir() {
    if (const char* env = std::getenv("AXEBENCH_DATA_DIR"); env && *env) return env;
    return AXEBENCH_DATA_DIR;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed << v;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cli_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cli_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw cli_error("invalid JSON in " + path.string() + ": " + e.what());
    }
}

bool is_preset(const std::string& name) {
    return std::find(kPresets.begin(), kPresets.end(), name) != kPresets.end();
}

Dataset load_dataset(const RunConfig& cfg, const std::string& dataset) {
    if (!dataset.empty()) {
        if (is_preset(dataset)) {
            const fs::path schema = cfg.schema.empty() ? data_dir() / "schemas" / (dataset + ".json") : fs::path(cfg.schema);
            return load_csv(data_dir() / (dataset + ".csv"), load_schema(schema));
        }
        if (cfg.schema.empty()) throw cli_error("--schema is required for dataset file '" + dataset + "'");
        return load_csv(dataset, load_schema(cfg.schema));
    }
    if (!cfg.synthetic.empty()) return generate_synthetic(parse_synthetic_spec(cfg.synthetic));
    throw cli_error("no dataset: pass --dataset or --synthetic");
}

std::size_t column_of(const Dataset& d, const std::string& name) {
    if (auto idx = d.feature_index(name)) return *idx;
    if (!name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isdigit(c); })) {
        const auto idx = static_cast<std::size_t>(std::stoull(name));
        if (idx < d.cols()) return idx;
    }
    throw cli_error("unknown column '" + name + "'");
}

PredictorPtr resolve_model(const RunConfig& cfg, const Dataset& d) {
    const std::uint64_t seed = derive_seed(cfg.seed, "cli.model");
    if (cfg.model == "logistic") return train_logistic(d, 1e-3, seed);
    if (cfg.model == "mlp") {
        MlpSpec spec;
        spec.seed = seed;
        return train_mlp(d, spec);
    }
    if (cfg.model.rfind("rule:", 0) == 0)
        return make_rule_predictor({column_of(d, cfg.model.substr(5)), 0.0, true}, d.cols());
    auto m = load_model(read_json(cfg.model));
    if (m->input_dim() != d.cols())
        throw cli_error("model expects " + std::to_string(m->input_dim()) + " features, dataset has " +
                        std::to_string(d.cols()));
    return m;
}

struct ResolvedExplanations {
    std::vector<Explanation> E;
    bool computed = false;
};

ResolvedExplanations resolve_explanations(const RunConfig& cfg, const Dataset& d, const Predictor& m) {
    if (!cfg.explanations.empty()) {
        auto E = read_explanations_csv(cfg.explanations, fs::path(cfg.explanations).stem().string());
        if (E.size() != d.rows())
            throw cli_error("length mismatch: " + std::to_string(E.size()) + " explanations for " +
                            std::to_string(d.rows()) + " rows");
        for (const auto& e : E) {
            if (e.importances.size() != d.cols())
                throw cli_error("length mismatch: explanation for row " + std::to_string(e.datapoint_index) + " has " +
                                std::to_string(e.importances.size()) + " values, dataset has " +
                                std::to_string(d.cols()) + " features");
            if (e.datapoint_index >= d.rows())
                throw cli_error("explanation row " + std::to_string(e.datapoint_index) + " out of range");
        }
        return {std::move(E), false};
    }
    if (cfg.explainer.rfind("manual:", 0) == 0)
        return {make_manual_explanations(d, column_of(d, cfg.explainer.substr(7))), true};
    ExplainerConfig ec;
    ec.kind = parse_explainer_kind(cfg.explainer);
    ec.samples = cfg.explainer_samples;
    ec.seed = derive_seed(cfg.seed, "cli.explainer");
    return {explain_dataset(m, d, ec, cfg.jobs), true};
}

std::vector<Explanation> resolve_reference(const RunConfig& cfg, const Predictor& m, std::size_t cols) {
    Explanation ref;
    ref.explainer_tag = "reference";
    if (cfg.reference == "model") {
        const auto* lin = dynamic_cast<const LinearPredictor*>(&m);
        if (!lin) throw cli_error("--reference model needs a linear model; pass explicit values");
        ref.importances = lin->spec().coefficients;
    } else {
        for (const auto& v : split(cfg.reference, ',')) ref.importances.push_back(std::stod(v));
        if (ref.importances.size() != cols)
            throw cli_error("length mismatch: reference has " + std::to_string(ref.importances.size()) +
                            " values, dataset has " + std::to_string(cols) + " features");
    }
    return {ref};
}

std::string hyperparam_string(const QualityReport& r) {
    std::string s;
    for (const auto& [k, v] : r.hyperparams) s += (s.empty() ? "" : ";") + k + "=" + v;
    return s;
}

std::size_t effective_n(const RunConfig& cfg, std::size_t fallback) { return cfg.n ? cfg.n : fallback; }

// ---------------------------------------------------------------------------

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
    const Dataset d = load_dataset(cfg, cfg.dataset);
    const auto m = resolve_model(cfg, d);
    write_json(cfg.out / "model.json", save_model(*m));
    auto [E, computed] = resolve_explanations(cfg, d, *m);
    if (computed) write_explanations_csv(cfg.out / "explanations.csv", E, d.feature_names());

    const auto metrics = cfg.metrics.empty() ? std::vector<std::string>{"axe"} : cfg.metrics;
    const auto y_preds = predict_all(*m, d);
    std::optional<std::vector<Explanation>> reference;
    std::string summary = "metric\thyperparams\taggregate_q\tundefined\n";

    for (const auto& name : metrics) {
        const MetricKind kind = parse_metric_kind(name);
        if (is_ground_truth(kind) && !reference) reference = resolve_reference(cfg, *m, d.cols());
        const std::vector<std::size_t> ks = kind == MetricKind::AXE ? cfg.ks : std::vector<std::size_t>{0};
        for (std::size_t k : ks) {
            MetricSpec spec;
            spec.kind = kind;
            spec.n = effective_n(cfg, 1);
            spec.k = k;
            spec.include_self = cfg.include_self;
            spec.num_perturbations = cfg.num_perturbations;
            spec.sigma = cfg.sigma;
            spec.seed = cfg.seed;
            EvaluationInputs in;
            in.data = &d;
            in.model = m.get();
            in.explanations = &E;
            in.reference = reference ? &*reference : nullptr;
            in.y_preds = y_preds;
            in.jobs = cfg.jobs;
            auto r = evaluate_metric(spec, in);
            r.dataset_id = d.id();
            r.model_descriptor = m->descriptor();
            if (!E.empty()) r.explainer_tag = E.front().explainer_tag;

            const std::string file =
                "report_" + to_string(kind) + (kind == MetricKind::AXE ? "_k" + std::to_string(k) : "") + ".json";
            write_json(cfg.out / file, report_to_json(r));
            const std::string agg = r.aggregate_q ? fmt(*r.aggregate_q) : "undefined";
            summary += r.metric_name + "\t" + hyperparam_string(r) + "\t" + agg + "\t" +
                       std::to_string(r.undefined_count()) + "\n";
            log << r.metric_name << " [" << hyperparam_string(r) << "] aggregate_q=" << agg;
            if (r.undefined_count()) log << " (" << r.undefined_count() << " undefined)";
            log << "\n";
        }
    }
    write_text(cfg.out / "summary.tsv", summary);
}

void cmd_explain(const RunConfig& cfg, std::ostream& log) {
    const Dataset d = load_dataset(cfg, cfg.dataset);
    const auto m = resolve_model(cfg, d);
    write_json(cfg.out / "model.json", save_model(*m));
    const auto [E, computed] = resolve_explanations(cfg, d, *m);
    write_explanations_csv(cfg.out / "explanations.csv", E, d.feature_names());
    std::size_t flagged = 0;
    for (const auto& e : E) flagged += !e.diagnostics.empty();
    log << "explained " << E.size() << " rows with " << (E.empty() ? cfg.explainer : E.front().explainer_tag);
    if (flagged) log << " (" << flagged << " with diagnostics)";
    log << "\n";
}

AttackSpec generic_attack_spec(const Dataset& d, std::uint64_t seed) {
    AttackSpec s;
    s.dataset_name = d.id();
    s.seed = seed;
    std::vector<std::string> foils;
    for (std::size_t f : d.foil_indices()) foils.push_back(d.feature_names()[f]);
    if (foils.empty()) {
        s.appended_foils = {"unrelated_column_one", "unrelated_column_two"};
        foils = s.appended_foils;
    }
    const std::vector<std::string> one{foils.front()};
    s.models = {{"m_L1", PerturbationKind::Gaussian, one}, {"m_S1", PerturbationKind::Substitution, one}};
    if (foils.size() >= 2) {
        const std::vector<std::string> two{foils[0], foils[1]};
        s.models.push_back({"m_L2", PerturbationKind::Gaussian, two});
        s.models.push_back({"m_S2", PerturbationKind::Substitution, two});
    }
    return s;
}

json bundle_json(const AttackBundle& b) {
    json models = json::array();
    for (const auto& m : b.models) {
        std::vector<std::string> foils;
        for (auto f : m.foil_indices) foils.push_back(b.data.feature_names()[f]);
        const auto& det = m.model->detector();
        models.push_back({{"name", m.name},
                          {"descriptor", m.model->descriptor()},
                          {"foils", foils},
                          {"agreement_with_biased", m.agreement},
                          {"detector",
                           {{"perturbation", to_string(det.kind)},
                            {"heldout_accuracy", det.heldout_accuracy},
                            {"heldout_real_accuracy", det.heldout_real_accuracy}}}});
    }
    return {{"schema_version", kSchemaVersion},
            {"dataset_id", b.dataset_id},
            {"rows", b.data.rows()},
            {"cols", b.data.cols()},
            {"protected", b.data.feature_names()[b.protected_index]},
            {"biased", b.biased->descriptor()},
            {"perturbation_std", b.perturbation_std},
            {"seed", b.seed},
            {"notes", b.data.notes()},
            {"models", models}};
}

void cmd_attack(const RunConfig& cfg, std::ostream& log) {
    std::vector<std::string> names;
    if (!cfg.dataset.empty()) names = split(cfg.dataset, ',');
    else if (cfg.synthetic.empty()) names = kPresets;

    DetectionConfig dc;
    dc.n = effective_n(cfg, 1);
    dc.ks = cfg.ks;
    dc.include_self = cfg.include_self;
    dc.perturb = {dc.n, cfg.num_perturbations, cfg.sigma, cfg.seed, true};
    dc.include_other = true;
    dc.jobs = cfg.jobs;

    DetectionVerdict all;
    auto run_one = [&](const Dataset& d, const AttackSpec& spec) {
        const AttackBundle b = build_attack_bundle(d, spec);
        write_json(cfg.out / ("attack_" + b.dataset_id + ".json"), bundle_json(b));
        log << "attack " << b.dataset_id << ": " << b.models.size() << " models\n";
        auto v = run_fairwash_detection(b, dc);
        all.rows.insert(all.rows.end(), v.rows.begin(), v.rows.end());
    };
    if (names.empty()) {
        const Dataset d = load_dataset(cfg, "");
        run_one(d, generic_attack_spec(d, cfg.seed));
    }
    for (const auto& name : names) {
        const Dataset d = load_dataset(cfg, name);
        run_one(d, is_preset(name) ? attack_preset(name, cfg.seed) : generic_attack_spec(d, cfg.seed));
    }
    write_json(cfg.out / "verdict.json", verdict_to_json(all));
    const std::string table = verdict_table(all);
    write_text(cfg.out / "verdict.tsv", table);
    log << table;
}

void cmd_region_grid(const RunConfig& cfg, std::ostream& log) {
    RegionGridSpec spec;
    spec.e_star = cfg.e_star;
    spec.resolution = cfg.resolution;
    spec.n = effective_n(cfg, 2);
    if (!cfg.metrics.empty()) {
        spec.metrics.clear();
        for (const auto& name : cfg.metrics) {
            const MetricKind kind = parse_metric_kind(name);
            if (!is_ground_truth(kind)) throw cli_error("region-grid supports ground-truth metrics only, got " + name);
            spec.metrics.push_back(kind);
        }
    }
    const auto result = run_region_grid(spec, cfg.jobs);
    for (const auto& g : result.grids) {
        write_region_grid_tsv(cfg.out / ("grid_" + to_string(g.metric) + ".tsv"), result, g);
        log << to_string(g.metric) << ": " << g.distinct.size() << " distinct values";
        if (g.undefined) log << ", " << g.undefined << " undefined cells";
        log << "\n";
    }
    write_json(cfg.out / "region_summary.json", region_summary_json(result));
}

void cmd_principles(const RunConfig& cfg, std::ostream& log) {
    const auto fx = make_principle_fixtures(cfg.seed);
    MetricSpec base;
    base.n = effective_n(cfg, 1);
    base.k = cfg.ks.front();
    base.include_self = cfg.include_self;
    base.num_perturbations = cfg.num_perturbations;
    base.sigma = cfg.sigma;
    base.seed = cfg.seed;
    std::vector<MetricKind> kinds;
    if (cfg.metrics.empty()) kinds = all_metric_kinds();
    for (const auto& name : cfg.metrics) kinds.push_back(parse_metric_kind(name));

    std::vector<PrincipleResult> results;
    std::string table = "metric\tP1\tP2\tP3\n";
    for (MetricKind kind : kinds) {
        base.kind = kind;
        results.push_back(run_principle_suite(kind, fx, base));
        table += to_string(kind);
        for (const auto& w : results.back().witnesses) table += "\t" + to_string(w.outcome);
        table += "\n";
    }
    write_json(cfg.out / "principles.json", principles_to_json(results, fx));
    write_text(cfg.out / "principles.tsv", table);
    log << table;
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
    if (cfg.source.empty()) throw cli_error("report needs --from <output directory>");
    const fs::path src = cfg.source;
    if (!fs::is_directory(src)) throw cli_error("not a directory: " + src.string());
    std::ostringstream out;

    std::vector<fs::path> reports;
    for (const auto& entry : fs::directory_iterator(src)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("report_", 0) == 0 && entry.path().extension() == ".json") reports.push_back(entry.path());
    }
    std::sort(reports.begin(), reports.end());
    for (const auto& p : reports) {
        const auto r = report_from_json(read_json(p));
        out << r.metric_name << "\t" << hyperparam_string(r) << "\t"
            << (r.aggregate_q ? fmt(*r.aggregate_q) : "undefined") << "\n";
    }
    if (fs::exists(src / "verdict.json")) out << verdict_table(verdict_from_json(read_json(src / "verdict.json")));
    if (fs::exists(src / "principles.tsv")) {
        std::ifstream in(src / "principles.tsv");
        out << in.rdbuf();
    }
    if (fs::exists(src / "region_summary.json")) {
        const auto j = read_json(src / "region_summary.json");
        for (const auto& [metric, entry] : j.at("metrics").items())
            out << metric << "\t" << entry.at("distinct_values").dump() << "\n";
    }
    if (out.str().empty()) throw cli_error("no artifacts found in " + src.string());
    write_text(cfg.out / "report.txt", out.str());
    log << out.str();
}

// ---------------------------------------------------------------------------
// Layered configuration.

json execution_json(const RunConfig& cfg) { return {{"out", cfg.out.string()}, {"jobs", cfg.jobs}}; }

json env_layer(const json& defaults) {
    json layer = json::object();
    for (const auto& [key, value] : defaults.items()) {
        std::string var = "AXEBENCH_";
        for (char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        const char* raw = std::getenv(var.c_str());
        if (!raw) continue;
        const std::string s = raw;
        try {
            if (value.is_boolean()) layer[key] = s == "1" || s == "true" || s == "yes";
            else if (value.is_number_unsigned()) layer[key] = std::stoull(s);
            else if (value.is_number()) layer[key] = std::stod(s);
            else if (value.is_array()) {
                json arr = json::array();
                const bool numeric = !value.empty() && value.front().is_number();
                for (const auto& item : split(s, ',')) {
                    if (!numeric) arr.push_back(item);
                    else if (value.front().is_number_unsigned()) arr.push_back(std::stoull(item));
                    else arr.push_back(std::stod(item));
                }
                layer[key] = arr;
            } else layer[key] = s;
        } catch (const std::exception&) {
            throw cli_error("cannot parse " + var + "='" + s + "'");
        }
    }
    return layer;
}

}  // namespace

json run_config_to_json(const RunConfig& c) {
    return {{"schema_version", kSchemaVersion},
            {"command", c.command},
            {"dataset", c.dataset},
            {"schema", c.schema},
            {"synthetic", c.synthetic},
            {"model", c.model},
            {"explainer", c.explainer},
            {"explanations", c.explanations},
            {"reference", c.reference},
            {"metrics", c.metrics},
            {"n", c.n},
            {"ks", c.ks},
            {"include_self", c.include_self},
            {"num_perturbations", c.num_perturbations},
            {"sigma", c.sigma},
            {"explainer_samples", c.explainer_samples},
            {"e_star", c.e_star},
            {"resolution", c.resolution},
            {"source", c.source},
            {"seed", c.seed}};
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw cli_error("run config must be a JSON object");
    const json known = run_config_to_json(c);
    for (const auto& [key, value] : j.items())
        if (!known.contains(key) && key != "out" && key != "jobs") throw cli_error("unknown config key '" + key + "'");
    if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
        throw cli_error("unsupported run config schema version");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("command", c.command);
        get("dataset", c.dataset);
        get("schema", c.schema);
        get("synthetic", c.synthetic);
        get("model", c.model);
        get("explainer", c.explainer);
        get("explanations", c.explanations);
        get("reference", c.reference);
        get("metrics", c.metrics);
        get("n", c.n);
        get("ks", c.ks);
        get("include_self", c.include_self);
        get("num_perturbations", c.num_perturbations);
        get("sigma", c.sigma);
        get("explainer_samples", c.explainer_samples);
        get("e_star", c.e_star);
        get("resolution", c.resolution);
        get("source", c.source);
        get("seed", c.seed);
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        get("jobs", c.jobs);
    } catch (const json::exception& e) {
        throw cli_error(std::string("invalid run config: ") + e.what());
    }
    if (c.ks.empty()) throw cli_error("ks must not be empty");
    return c;
}

void run_command(const RunConfig& cfg, std::ostream& log) {
    if (!kCommands.count(cfg.command)) throw cli_error("unknown command '" + cfg.command + "'");
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw cli_error("cannot create " + cfg.out.string() + ": " + ec.message());
    write_json(cfg.out / "run_config.json", run_config_to_json(cfg));

    if (cfg.command == "evaluate") cmd_evaluate(cfg, log);
    else if (cfg.command == "explain") cmd_explain(cfg, log);
    else if (cfg.command == "attack") cmd_attack(cfg, log);
    else if (cfg.command == "region-grid") cmd_region_grid(cfg, log);
    else if (cfg.command == "principles") cmd_principles(cfg, log);
    else cmd_report(cfg, log);
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"axebench: evaluate feature-importance explanations and their metrics"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    for (const auto& name : {"evaluate", "explain", "attack", "region-grid", "principles", "report"})
        app.add_subcommand(name, "");
    app.get_subcommand("evaluate")->description("score explanations with one or more metrics");
    app.get_subcommand("explain")->description("write explanations for every dataset row");
    app.get_subcommand("attack")->description("build scaffolding attacks and run fairwashing detection");
    app.get_subcommand("region-grid")->description("ground-truth metrics over a grid of 2-feature explanations");
    app.get_subcommand("principles")->description("check every metric against the three principles");
    app.get_subcommand("report")->description("summarize the artifacts of an output directory");

    std::string config_path, dataset, schema, synthetic, model, explainer, explanations, reference, source, out;
    std::vector<std::string> metrics;
    std::vector<std::size_t> ks;
    std::vector<double> e_star;
    std::size_t n = 0, num_perturbations = 0, samples = 0, resolution = 0, jobs = 0;
    std::uint64_t seed = 0;
    double sigma = 0;
    bool include_self = false;

    app.add_option("--config", config_path, "RunConfig JSON file (overrides AXEBENCH_* env, overridden by flags)");
    auto* o_dataset = app.add_option("--dataset", dataset, "preset name or CSV path (attack: comma-separated presets)");
    auto* o_schema = app.add_option("--schema", schema, "schema JSON for a CSV dataset");
    auto* o_synth = app.add_option("--synthetic", synthetic, "kind:rows=R,cols=C,seed=S,...");
    auto* o_model = app.add_option("--model", model, "logistic | mlp | rule:<column> | <model.json>");
    auto* o_expl = app.add_option("--explainer", explainer,
                                  "gradient | integrated-gradients | local-surrogate | kernel-shapley | manual:<column>");
    auto* o_file = app.add_option("--explanations", explanations, "explanation CSV to evaluate");
    auto* o_ref = app.add_option("--reference", reference, "e* for ground-truth metrics: model | v1,v2,...");
    auto* o_metric = app.add_option("--metric", metrics, "fa ra sa sra rc pra pgi pgu axe (repeatable)")->delimiter(',');
    auto* o_n = app.add_option("--n", n, "top-n features");
    auto* o_k = app.add_option("--k", ks, "AXE neighbours (repeatable)")->delimiter(',');
    auto* o_self = app.add_flag("--include-self", include_self, "let a row be its own AXE neighbour");
    auto* o_pert = app.add_option("--perturbations", num_perturbations, "PGI/PGU perturbations per row");
    auto* o_sigma = app.add_option("--sigma", sigma, "PGI/PGU noise std");
    auto* o_samples = app.add_option("--samples", samples, "explainer samples");
    auto* o_estar = app.add_option("--e-star", e_star, "region-grid reference e1,e2")->delimiter(',')->expected(2);
    auto* o_res = app.add_option("--resolution", resolution, "region-grid cells per axis");
    auto* o_from = app.add_option("--from", source, "output directory read by report");
    auto* o_seed = app.add_option("--seed", seed, "top-level seed");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_jobs = app.add_option("--jobs", jobs, "worker threads (0 = logical cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig defaults;
        json merged = run_config_to_json(defaults);
        merged.update(execution_json(defaults));
        merged.update(env_layer(merged));
        if (!config_path.empty()) merged.update(read_json(config_path));

        json flags = json::object();
        auto set = [&](CLI::Option* opt, const char* key, const json& value) {
            if (opt->count()) flags[key] = value;
        };
        set(o_dataset, "dataset", dataset);
        set(o_schema, "schema", schema);
        set(o_synth, "synthetic", synthetic);
        set(o_model, "model", model);
        set(o_expl, "explainer", explainer);
        set(o_file, "explanations", explanations);
        set(o_ref, "reference", reference);
        set(o_metric, "metrics", metrics);
        set(o_n, "n", n);
        set(o_k, "ks", ks);
        set(o_self, "include_self", include_self);
        set(o_pert, "num_perturbations", num_perturbations);
        set(o_sigma, "sigma", sigma);
        set(o_samples, "explainer_samples", samples);
        set(o_estar, "e_star", e_star);
        set(o_res, "resolution", resolution);
        set(o_from, "source", source);
        set(o_seed, "seed", seed);
        set(o_out, "out", out);
        set(o_jobs, "jobs", jobs);
        merged.update(flags);
        const auto subs = app.get_subcommands();
        if (!subs.empty()) merged["command"] = subs.front()->get_name();

        RunConfig cfg = run_config_from_json(merged);
        if (cfg.command.empty()) throw cli_error("no command given; see --help");
        if (cfg.jobs) set_default_jobs(cfg.jobs);
        run_command(cfg, std::cout);
        return 0;
    } catch (const Error& e) {
        std::cerr << e.module() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "cli: " << e.what() << "\n";
    }
    return 2;
}

}  // namespace axebench
