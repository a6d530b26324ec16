#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "axebench/axe.hpp"
#include "axebench/core.hpp"
#include "axebench/metrics_sensitivity.hpp"
#include "axebench/models.hpp"

namespace axebench {

/// Version stamped into every JSON artifact written by this module.
inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Uniform metric dispatch.

enum class MetricKind { FA, RA, SA, SRA, RC, PRA, PGI, PGU, AXE };

std::string to_string(MetricKind kind);
MetricKind parse_metric_kind(const std::string& name);
const std::vector<MetricKind>& all_metric_kinds();
bool is_ground_truth(MetricKind kind);

struct MetricSpec {
    MetricKind kind = MetricKind::AXE;
    std::size_t n = 1;
    std::size_t k = 5;
    bool include_self = false;
    std::size_t num_perturbations = 100;
    double sigma = 0.5;
    bool negate_pgu = false;
    std::uint64_t seed = 0;

    AxeConfig axe() const { return {n, k, include_self}; }
    PerturbConfig perturb() const { return {n, num_perturbations, sigma, seed, negate_pgu}; }
};

/// Everything a metric may consume. Ground-truth metrics read `reference`
/// (one e* shared by all rows, or one per explanation) and ignore the model;
/// AXE reads only the data, the explanations and y_preds.
struct EvaluationInputs {
    const Dataset* data = nullptr;
    const Predictor* model = nullptr;
    const std::vector<Explanation>* explanations = nullptr;
    const std::vector<Explanation>* reference = nullptr;
    /// Model outputs on data; computed from `model` when empty.
    std::optional<std::vector<int>> y_preds;
    std::size_t jobs = 0;
};

QualityReport evaluate_metric(const MetricSpec& spec, const EvaluationInputs& in);

nlohmann::json report_to_json(const QualityReport& r);
QualityReport report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Region grid: ground-truth metrics over every e = (i1, i2) in a square.

struct RegionGridSpec {
    std::array<double, 2> e_star{0.7, 0.3};
    double lo = -1.0;
    double hi = 1.0;
    std::size_t resolution = 201;
    std::size_t n = 2;
    std::vector<MetricKind> metrics{MetricKind::FA, MetricKind::RA, MetricKind::SA,
                                    MetricKind::SRA, MetricKind::RC, MetricKind::PRA};

    void validate() const;
    double axis(std::size_t j) const;
};

struct RegionGrid {
    MetricKind metric = MetricKind::FA;
    /// values[a * resolution + b] scores e = (axis(a), axis(b)); empty = undefined.
    std::vector<std::optional<double>> values;
    std::vector<double> distinct;
    std::size_t undefined = 0;
};

struct RegionGridResult {
    RegionGridSpec spec;
    std::vector<RegionGrid> grids;

    const RegionGrid& grid(MetricKind kind) const;
};

RegionGridResult run_region_grid(const RegionGridSpec& spec, std::size_t jobs = 0);
/// Columns i1, i2, metric, q; undefined cells print "undefined".
void write_region_grid_tsv(const std::filesystem::path& path, const RegionGridResult& result, const RegionGrid& grid);
/// Distinct values per metric overall and within each sign/order region of (i1, i2).
nlohmann::json region_summary_json(const RegionGridResult& result);

// ---------------------------------------------------------------------------
// Fairwashing attack and detection.

struct AttackModelSpec {
    std::string name;  // e.g. "m_L1"
    PerturbationKind perturbation = PerturbationKind::Gaussian;
    std::vector<std::string> foil_columns;
};

struct AttackSpec {
    std::string dataset_name;
    std::string protected_column;
    bool positive_above = true;
    /// Seeded binary columns appended to the data before the attack.
    std::vector<std::string> appended_foils;
    /// Foil rules fire when the foil column exceeds 0 (standardized), with
    /// the polarity of `foil_positive_above`.
    bool foil_positive_above = true;
    std::vector<AttackModelSpec> models;
    double perturbation_std = 1.0;
    std::size_t perturbation_copies = 10;
    double accuracy_floor = 0.85;
    TreeEnsembleParams detector_params;
    std::uint64_t seed = 0;
};

/// Configuration for the three benchmark datasets, following the original
/// scaffolding-attack setup: German Credit uses its loan-rate column as the
/// single foil; COMPAS and Communities and Crime get two appended random
/// binary columns.
AttackSpec attack_preset(const std::string& dataset_name, std::uint64_t seed = 0);

struct AttackModel {
    std::string name;
    std::shared_ptr<const ScaffoldPredictor> model;
    std::vector<std::size_t> foil_indices;
    /// On-dataset prediction agreement with the biased model.
    double agreement = 0.0;
};

struct AttackBundle {
    std::string dataset_id;
    Dataset data;
    std::shared_ptr<const RulePredictor> biased;
    std::size_t protected_index = 0;
    std::vector<AttackModel> models;
    double perturbation_std = 1.0;
    std::uint64_t seed = 0;

    /// Every feature that is neither protected nor a foil of any model.
    std::vector<std::size_t> other_indices() const;
};

/// Appends `names.size()` seeded binary columns with |corr(column, labels)| < 0.15
/// and records them in the dataset notes. Returns their indices.
std::vector<std::size_t> append_unrelated_columns(Dataset& d, const std::vector<std::string>& names,
                                                  std::uint64_t seed);

AttackBundle build_attack_bundle(const Dataset& d, const AttackSpec& spec);

struct DetectionConfig {
    std::size_t n = 1;
    std::vector<std::size_t> ks{5};
    bool include_self = false;
    PerturbConfig perturb{1, 100, 0.5, 0, true};
    /// Also score E_omega (the mean over all other one-hot explanations).
    bool include_other = true;
    std::size_t jobs = 0;
};

/// q-bar for each explanation set; E_psi is absent for single-foil models.
struct SetScores {
    double rho = 0.0;
    double phi = 0.0;
    std::optional<double> psi;
    std::optional<double> omega;
};

struct VerdictRow {
    std::string dataset_id;
    std::string model_name;
    std::string metric;  // "axe(k=5)", "pgi", "-pgu"
    SetScores q;
    bool pass_phi = false;
    std::optional<bool> pass_psi;
    bool pass = false;

    /// Pass flags derived from q alone.
    void recompute();
    /// Smallest of q.rho - q.phi and q.rho - q.psi.
    double margin() const;
};

struct DetectionVerdict {
    std::vector<VerdictRow> rows;

    std::size_t failures(const std::string& metric_prefix) const;
};

DetectionVerdict run_fairwash_detection(const AttackBundle& bundle, const DetectionConfig& cfg);

nlohmann::json verdict_to_json(const DetectionVerdict& v);
DetectionVerdict verdict_from_json(const nlohmann::json& j);
/// Table layout: dataset, model, metric, q(E_rho), q(E_phi), q(E_psi), q(E_omega), pass.
std::string verdict_table(const DetectionVerdict& v);

// ---------------------------------------------------------------------------
// Principle suite.

enum class Principle { LocalContextualization, ModelRelativism, OnManifold };
enum class PrincipleOutcome { Pass, Fail, NotApplicable };

std::string to_string(Principle p);
std::string to_string(PrincipleOutcome o);

struct PrincipleWitness {
    Principle principle = Principle::LocalContextualization;
    PrincipleOutcome outcome = PrincipleOutcome::NotApplicable;
    /// Fixture identifier and the observed values that decided the outcome.
    nlohmann::json evidence;
};

struct PrincipleResult {
    MetricKind metric = MetricKind::AXE;
    std::array<PrincipleWitness, 3> witnesses;
};

/// Seeded fixtures shared by every metric:
///  - data: threshold-rule synthetic data with one signal and two noise columns;
///  - model_a / model_b: logistic models that disagree on a few rows (P2);
///  - model_c: equals model_a on every row of data and differs elsewhere (P3);
///  - explanation: one fixed vector applied to every row (P1);
///  - reference: the e* used by ground-truth metrics.
struct PrincipleFixtures {
    std::uint64_t seed = 0;
    Dataset data;
    PredictorPtr model_a;
    PredictorPtr model_b;
    PredictorPtr model_c;
    std::vector<double> explanation;
    std::vector<double> reference;
};

PrincipleFixtures make_principle_fixtures(std::uint64_t seed);
PrincipleResult run_principle_suite(MetricKind metric, const PrincipleFixtures& fixtures, const MetricSpec& base = {});
nlohmann::json principles_to_json(const std::vector<PrincipleResult>& results, const PrincipleFixtures& fixtures);

/// A predictor that reproduces `inner` exactly on the rows of a dataset and
/// returns `off_manifold_proba` everywhere else.
class OnManifoldPredictor final : public Predictor {
public:
    OnManifoldPredictor(PredictorPtr inner, const Dataset& d, double off_manifold_proba);

    double predict_proba(std::span<const double> x) const override;
    std::string descriptor() const override;
    std::size_t input_dim() const override { return inner_->input_dim(); }

private:
    PredictorPtr inner_;
    std::vector<std::vector<double>> rows_;
    double off_;
};

}  // namespace axebench
