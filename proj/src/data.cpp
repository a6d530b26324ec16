#include "axebench/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "axebench/support.hpp"

namespace axebench {

namespace {

Error data_error(const std::string& what) { return Error("data", what); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double param_or(const SyntheticSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

}  // namespace

void DatasetSchema::validate() const {
    auto has = [&](const std::string& c) {
        return std::find(column_names.begin(), column_names.end(), c) != column_names.end();
    };
    if (name.empty()) throw data_error("schema needs a name");
    if (!has(target_column)) throw data_error("schema mismatch: target column '" + target_column + "' not listed");
    if (!protected_column.empty() && !has(protected_column))
        throw data_error("schema mismatch: protected column '" + protected_column + "' not listed");
    for (const auto& [col, mapping] : categorical_columns) {
        if (!has(col)) throw data_error("schema mismatch: categorical column '" + col + "' not listed");
        if (mapping.empty()) throw data_error("categorical column '" + col + "' has an empty encoding map");
    }
    for (const auto& f : foil_columns)
        if (!has(f)) throw data_error("schema mismatch: foil column '" + f + "' not listed");
}

DatasetSchema parse_schema(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    DatasetSchema s;
    s.name = j.at("name").get<std::string>();
    s.column_names = j.at("column_names").get<std::vector<std::string>>();
    s.target_column = j.at("target_column").get<std::string>();
    s.protected_column = j.value("protected_column", std::string{});
    if (j.contains("categorical_columns"))
        s.categorical_columns =
            j.at("categorical_columns").get<std::map<std::string, std::map<std::string, double>>>();
    s.drop_columns = j.value("drop_columns", std::vector<std::string>{});
    s.foil_columns = j.value("foil_columns", std::vector<std::string>{});
    if (j.contains("missing_values")) s.missing_values = j.at("missing_values").get<std::vector<std::string>>();
    s.validate();
    return s;
}

DatasetSchema load_schema(const std::filesystem::path& path) { return parse_schema(read_file(path)); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;  // UTF-8 BOM
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else if (c == '\n') {
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw data_error("unterminated quoted field");
    if (field_started || !row.empty()) end_row();
    return rows;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
    return load_csv_text(read_file(path), schema);
}

Dataset load_csv_text(const std::string& text, const DatasetSchema& schema) {
    schema.validate();
    const auto table = parse_csv(text);
    if (table.empty()) throw data_error("schema mismatch: empty file");
    const auto& header = table.front();

    std::map<std::string, std::size_t> header_pos;
    for (std::size_t c = 0; c < header.size(); ++c) header_pos[trim(header[c])] = c;
    for (const auto& col : schema.column_names)
        if (!header_pos.count(col)) throw data_error("schema mismatch: missing column '" + col + "'");

    const std::set<std::string> dropped(schema.drop_columns.begin(), schema.drop_columns.end());
    std::vector<std::string> feature_cols;
    for (const auto& col : schema.column_names)
        if (col != schema.target_column && !dropped.count(col)) feature_cols.push_back(col);
    if (feature_cols.empty()) throw data_error("schema leaves no feature columns");

    const std::set<std::string> missing(schema.missing_values.begin(), schema.missing_values.end());
    auto decode = [&](const std::string& col, const std::string& cell, std::size_t row_no,
                      double& out) -> bool {
        const std::string t = trim(cell);
        if (missing.count(t)) return false;
        if (auto it = schema.categorical_columns.find(col); it != schema.categorical_columns.end()) {
            auto code = it->second.find(t);
            if (code == it->second.end())
                throw data_error("parse error at row " + std::to_string(row_no) + ", col " + col +
                                 ": unknown category '" + t + "'");
            out = code->second;
            return true;
        }
        if (!parse_double(t, out))
            throw data_error("parse error at row " + std::to_string(row_no) + ", col " + col);
        return true;
    };

    std::vector<double> raw;
    std::vector<int> labels;
    std::size_t dropped_rows = 0;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& cells = table[r];
        if (cells.size() != header.size())
            throw data_error("parse error at row " + std::to_string(r) + ": expected " +
                             std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        std::vector<double> values(feature_cols.size());
        bool complete = true;
        for (std::size_t f = 0; f < feature_cols.size() && complete; ++f)
            complete = decode(feature_cols[f], cells[header_pos[feature_cols[f]]], r, values[f]);
        double y = 0.0;
        if (complete) complete = decode(schema.target_column, cells[header_pos[schema.target_column]], r, y);
        if (!complete) {
            ++dropped_rows;
            continue;
        }
        if (y != 0.0 && y != 1.0)
            throw data_error("parse error at row " + std::to_string(r) + ", col " + schema.target_column +
                             ": target must be 0 or 1");
        raw.insert(raw.end(), values.begin(), values.end());
        labels.push_back(static_cast<int>(y));
    }
    if (labels.empty()) throw data_error("no complete rows in file");

    // Drop constant columns before building the dataset.
    const std::size_t rows = labels.size();
    std::vector<std::size_t> keep;
    std::vector<std::string> notes;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        bool constant = true;
        for (std::size_t i = 1; i < rows && constant; ++i)
            constant = raw[i * feature_cols.size() + f] == raw[f];
        if (constant) {
            if (feature_cols[f] == schema.protected_column)
                throw data_error("protected column '" + feature_cols[f] + "' is constant");
            notes.push_back("dropped constant column '" + feature_cols[f] + "'");
        } else {
            keep.push_back(f);
        }
    }
    if (keep.empty()) throw data_error("every feature column is constant");
    std::vector<double> kept_raw;
    kept_raw.reserve(rows * keep.size());
    std::vector<std::string> names;
    for (std::size_t f : keep) names.push_back(feature_cols[f]);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t f : keep) kept_raw.push_back(raw[i * feature_cols.size() + f]);

    Dataset d(schema.name, rows, keep.size(), std::move(kept_raw), std::move(names));
    d.set_labels(std::move(labels));
    for (auto& n : notes) d.add_note(std::move(n));
    if (dropped_rows) d.add_note("dropped " + std::to_string(dropped_rows) + " rows with missing values");
    d.standardize_in_place();
    if (!schema.protected_column.empty()) d.set_protected_index(d.feature_index(schema.protected_column));
    std::vector<std::size_t> foils;
    for (const auto& f : schema.foil_columns) {
        auto idx = d.feature_index(f);
        if (!idx) throw data_error("foil column '" + f + "' was dropped as constant");
        foils.push_back(*idx);
    }
    d.set_foil_indices(std::move(foils));
    return d;
}

GeneratorKind parse_generator_kind(const std::string& name) {
    if (name == "gaussian-blobs") return GeneratorKind::GaussianBlobs;
    if (name == "threshold-rule") return GeneratorKind::ThresholdRule;
    if (name == "correlated-foil") return GeneratorKind::CorrelatedFoil;
    throw data_error("unknown generator kind '" + name + "'");
}

std::string to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::GaussianBlobs: return "gaussian-blobs";
        case GeneratorKind::ThresholdRule: return "threshold-rule";
        case GeneratorKind::CorrelatedFoil: return "correlated-foil";
    }
    return "unknown";
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
    SyntheticSpec spec;
    const auto colon = text.find(':');
    spec.kind = parse_generator_kind(text.substr(0, colon));
    if (colon == std::string::npos) return spec;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw data_error("bad synthetic spec item '" + item + "'");
        const std::string key = trim(item.substr(0, eq));
        double value = 0.0;
        if (!parse_double(item.substr(eq + 1), value)) throw data_error("bad synthetic spec value '" + item + "'");
        if (key == "rows") spec.rows = static_cast<std::size_t>(value);
        else if (key == "cols") spec.cols = static_cast<std::size_t>(value);
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(value);
        else spec.params[key] = value;
    }
    return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.rows < 2 || spec.cols < 2) throw data_error("synthetic data needs at least 2 rows and 2 columns");
    const std::size_t rows = spec.rows, cols = spec.cols;
    Rng rng = make_rng(spec.seed, "data.synthetic");
    std::vector<double> raw(rows * cols);
    std::vector<int> labels(rows);
    std::vector<std::string> names(cols);
    for (std::size_t j = 0; j < cols; ++j) names[j] = "x" + std::to_string(j);

    std::optional<std::size_t> protected_index;
    std::vector<std::size_t> foils;
    switch (spec.kind) {
        case GeneratorKind::GaussianBlobs: {
            const double half = param_or(spec, "separation", 3.0) / 2.0;
            for (std::size_t i = 0; i < rows; ++i) {
                labels[i] = static_cast<int>(uniform_index(rng, 2));
                const double centre = labels[i] ? half : -half;
                for (std::size_t j = 0; j < cols; ++j) raw[i * cols + j] = centre + standard_normal(rng);
            }
            break;
        }
        case GeneratorKind::ThresholdRule: {
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) raw[i * cols + j] = standard_normal(rng);
                labels[i] = raw[i * cols] > 0.0 ? 1 : 0;
            }
            break;
        }
        case GeneratorKind::CorrelatedFoil: {
            const auto foil_count = static_cast<std::size_t>(param_or(spec, "foils", 1.0));
            if (foil_count < 1 || foil_count > 2 || cols < foil_count + 1)
                throw data_error("correlated-foil needs 1 or 2 foils and room for the protected column");
            names[0] = "protected";
            protected_index = 0;
            for (std::size_t i = 0; i < rows; ++i) {
                raw[i * cols] = static_cast<double>(uniform_index(rng, 2));
                labels[i] = 1 - static_cast<int>(raw[i * cols]);
                for (std::size_t j = 1; j < cols; ++j) raw[i * cols + j] = standard_normal(rng);
            }
            std::vector<double> y(labels.begin(), labels.end());
            for (std::size_t f = 0; f < foil_count; ++f) {
                const std::size_t col = cols - foil_count + f;
                names[col] = "foil" + std::to_string(f);
                foils.push_back(col);
                // Redraw until the foil is empirically uncorrelated with the labels.
                for (std::uint64_t attempt = 0;; ++attempt) {
                    Rng foil_rng = make_rng(spec.seed, "data.synthetic.foil", f * 1000 + attempt);
                    std::vector<double> column(rows);
                    for (auto& v : column) v = static_cast<double>(uniform_index(foil_rng, 2));
                    if (std::abs(correlation(column, y)) < 0.15 || attempt == 999) {
                        for (std::size_t i = 0; i < rows; ++i) raw[i * cols + col] = column[i];
                        break;
                    }
                }
            }
            break;
        }
    }
    Dataset d(to_string(spec.kind) + "-seed" + std::to_string(spec.seed), rows, cols, std::move(raw),
              std::move(names));
    d.set_labels(std::move(labels));
    d.standardize_in_place();
    if (protected_index) d.set_protected_index(protected_index);
    d.set_foil_indices(std::move(foils));
    return d;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw data_error("split fraction must lie in (0, 1)");
    if (d.rows() < 2) throw data_error("split would leave one side empty");
    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "data.split");
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

    auto train_rows = static_cast<std::size_t>(std::floor(static_cast<double>(d.rows()) * fraction));
    train_rows = std::clamp<std::size_t>(train_rows, 1, d.rows() - 1);
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_rows));
    std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(train_rows), order.end());

    Dataset train = d.subset(train_idx);
    Dataset test = d.subset(test_idx);
    train.standardize_in_place();
    test.apply_standardization(train.standardization());
    train.set_id(d.id() + "-train");
    test.set_id(d.id() + "-test");
    return {std::move(train), std::move(test)};
}

}  // namespace axebench
