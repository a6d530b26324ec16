#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "axebench/core.hpp"

namespace axebench {

/// Describes how a CSV file maps onto a Dataset. Mirrors the JSON schema
/// files under data/schemas/.
struct DatasetSchema {
    std::string name;
    std::vector<std::string> column_names;
    std::string target_column;
    std::string protected_column;
    /// column -> (category string -> integer code)
    std::map<std::string, std::map<std::string, double>> categorical_columns;
    std::vector<std::string> drop_columns;
    /// Columns flagged as foils for the scaffolding attack (optional).
    std::vector<std::string> foil_columns;
    /// Cells treated as missing; rows containing one are dropped.
    std::vector<std::string> missing_values{"", "?", "NA"};

    void validate() const;
};

DatasetSchema load_schema(const std::filesystem::path& path);
DatasetSchema parse_schema(const std::string& json_text);

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
Dataset load_csv_text(const std::string& text, const DatasetSchema& schema);

enum class GeneratorKind { GaussianBlobs, ThresholdRule, CorrelatedFoil };

struct SyntheticSpec {
    std::size_t rows = 100;
    std::size_t cols = 2;
    std::uint64_t seed = 0;
    GeneratorKind kind = GeneratorKind::ThresholdRule;
    std::map<std::string, double> params;
};

GeneratorKind parse_generator_kind(const std::string& name);
std::string to_string(GeneratorKind kind);

/// Parses "kind:rows=R,cols=C,seed=S,param=value" as used by the CLI.
SyntheticSpec parse_synthetic_spec(const std::string& text);

/// Deterministic synthetic data.
///  - gaussian-blobs: two isotropic blobs at +/- separation/2 on every axis; label = blob.
///  - threshold-rule: standard normal features, label = 1[x0 > 0].
///  - correlated-foil: column 0 is a binary protected attribute that fixes the
///    label (label = 1 - protected); the last column is a binary foil drawn
///    independently of the labels; the rest are standard normal noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Shuffled row partition. The train side gets floor(rows * fraction) rows,
/// clamped to [1, rows - 1]. Both sides are standardized with train stats.
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double fraction, std::uint64_t seed);

}  // namespace axebench
