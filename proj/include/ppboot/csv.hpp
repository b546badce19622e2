#pragma once

// CSV ingestion with a column-role schema.

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataset.hpp"
#include "error.hpp"

namespace ppboot {

// Maps CSV header names to roles. An absent outcome means unlabeled data;
// an absent prediction is only allowed where predictions are produced later
// (cross-fitting).
struct Schema {
    std::optional<std::string> outcome;
    std::optional<std::string> prediction;
    std::vector<std::string> features;

    // {"outcome": "y", "prediction": "fhat", "features": ["x1", "x2"]}
    static Schema from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw SchemaError("schema must be a JSON object");
        Schema s;
        auto read_name = [&](const char* key) -> std::optional<std::string> {
            if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
            if (!j.at(key).is_string()) throw SchemaError(std::string("schema field '") + key + "' must be a string");
            return j.at(key).get<std::string>();
        };
        s.outcome = read_name("outcome");
        s.prediction = read_name("prediction");
        if (j.contains("features")) {
            const auto& f = j.at("features");
            if (!f.is_array()) throw SchemaError("schema field 'features' must be an array of names");
            for (const auto& name : f) {
                if (!name.is_string()) throw SchemaError("schema feature names must be strings");
                s.features.push_back(name.get<std::string>());
            }
        }
        for (const auto& key : j.items()) {
            if (key.key() != "outcome" && key.key() != "prediction" && key.key() != "features") {
                throw SchemaError("unknown schema field '" + key.key() + "'");
            }
        }
        return s;
    }

    static Schema from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw SchemaError("cannot open schema file '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("schema file '" + path + "' is not valid JSON: " + e.what());
        }
    }

    // Same columns with the outcome role removed.
    Schema without_outcome() const {
        Schema s = *this;
        s.outcome.reset();
        return s;
    }
};

// Raw parsed CSV: header plus unparsed cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw SchemaError("column '" + name + "' not found in CSV header");
    }
};

namespace detail {

// RFC 4180 records: comma separated, double-quote quoting with "" escapes,
// LF or CRLF line endings.
inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
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
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started && !field.empty()) {
                throw ParseError("stray quote in unquoted field on line " + std::to_string(line), line, record.size() + 1);
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            ++line;
            break;
        case '\n':
            end_record();
            ++line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", line, record.size() + 1);
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

} // namespace detail

inline CsvTable parse_csv(std::string_view text) {
    auto records = detail::parse_csv_records(text);
    if (records.empty()) throw SchemaError("CSV input has no header row");
    CsvTable table;
    table.header = std::move(records.front());
    for (auto& name : table.header) name = std::string(detail::trim(name));
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                 " fields but the header has " + std::to_string(table.header.size()),
                             r, records[r].size());
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str());
}

// Numeric column by header name. Cells that are not numbers raise a
// ParseError naming the 1-based data row; NaN and infinities raise a
// ValidationError.
inline std::vector<double> numeric_column(const CsvTable& table, const std::string& name) {
    const std::size_t col = table.column(name);
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto value = detail::parse_double(table.rows[r][col]);
        if (!value) {
            throw ParseError("cannot parse '" + table.rows[r][col] + "' as a number in column '" + name +
                                 "' at row " + std::to_string(r + 1),
                             r + 1, col + 1);
        }
        if (!std::isfinite(*value)) {
            throw ValidationError("non-finite value in column '" + name + "' at row " + std::to_string(r + 1));
        }
        out.push_back(*value);
    }
    return out;
}

inline Matrix feature_matrix(const CsvTable& table, const std::vector<std::string>& names) {
    Matrix x(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto col = numeric_column(table, names[j]);
        for (std::size_t i = 0; i < col.size(); ++i) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        }
    }
    return x;
}

// Features and outcomes without predictions (input to cross-fitting).
struct FeaturesAndOutcomes {
    Matrix features;
    std::vector<double> outcomes;
};

inline FeaturesAndOutcomes load_features_outcomes(const CsvTable& table, const Schema& schema) {
    if (!schema.outcome) throw SchemaError("schema does not name an outcome column");
    return {feature_matrix(table, schema.features), numeric_column(table, *schema.outcome)};
}

inline LabeledDataset load_labeled(const CsvTable& table, const Schema& schema) {
    if (!schema.outcome) throw SchemaError("schema does not name an outcome column");
    if (!schema.prediction) throw SchemaError("schema does not name a prediction column");
    return LabeledDataset(feature_matrix(table, schema.features), numeric_column(table, *schema.outcome),
                          numeric_column(table, *schema.prediction));
}

inline UnlabeledDataset load_unlabeled(const CsvTable& table, const Schema& schema) {
    if (!schema.prediction) throw SchemaError("schema does not name a prediction column");
    return UnlabeledDataset(feature_matrix(table, schema.features), numeric_column(table, *schema.prediction));
}

// Labeled when the schema names an outcome, unlabeled otherwise.
inline std::variant<LabeledDataset, UnlabeledDataset> load_csv(const std::string& path, const Schema& schema) {
    const CsvTable table = read_csv_file(path);
    if (schema.outcome) return load_labeled(table, schema);
    return load_unlabeled(table, schema);
}

} // namespace ppboot
