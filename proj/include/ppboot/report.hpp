#pragma once

// Plot-ready tables from a TrialSummary, as CSV or JSON.
//
// Numbers are written in the shortest form that parses back to the same
// double, so reports are byte-stable and round-trip exactly.

#include <array>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "error.hpp"
#include "experiments.hpp"

namespace ppboot {

struct AggregateRow {
    std::string method;
    std::size_t n = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double ground_truth = 0.0;

    friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct DisplayedRow {
    std::string method;
    std::size_t n = 0;
    std::size_t trial = 0;
    double lower = 0.0;
    double upper = 0.0;
    double point = 0.0;

    friend bool operator==(const DisplayedRow&, const DisplayedRow&) = default;
};

struct ReportTables {
    std::vector<AggregateRow> aggregate;
    std::vector<DisplayedRow> displayed;

    friend bool operator==(const ReportTables&, const ReportTables&) = default;
};

inline ReportTables summarize_to_tables(const TrialSummary& summary) {
    ReportTables t;
    for (const auto& c : summary.cells) {
        t.aggregate.push_back({c.method, c.n, c.coverage, c.mean_width, c.ground_truth});
    }
    for (const auto& d : summary.displayed) {
        t.displayed.push_back({d.method, d.n, d.trial, d.lower, d.upper, d.point});
    }
    return t;
}

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline double cell_double(const CsvTable& t, std::size_t row, const std::string& col) {
    const auto v = parse_double(t.rows[row][t.column(col)]);
    if (!v) throw ParseError("bad number in report column '" + col + "'", row + 1, t.column(col) + 1);
    return *v;
}

inline std::size_t cell_size(const CsvTable& t, std::size_t row, const std::string& col) {
    const std::string& s = t.rows[row][t.column(col)];
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad integer in report column '" + col + "'", row + 1, t.column(col) + 1);
    }
    return v;
}

} // namespace detail

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "method,n,coverage,mean_width,ground_truth\n";
    for (const auto& r : rows) {
        out += detail::csv_field(r.method) + ',' + std::to_string(r.n) + ',' + format_double(r.coverage) + ',' +
               format_double(r.mean_width) + ',' + format_double(r.ground_truth) + '\n';
    }
    return out;
}

inline std::string displayed_csv(const std::vector<DisplayedRow>& rows) {
    std::string out = "method,n,trial,lower,upper,point\n";
    for (const auto& r : rows) {
        out += detail::csv_field(r.method) + ',' + std::to_string(r.n) + ',' + std::to_string(r.trial) + ',' +
               format_double(r.lower) + ',' + format_double(r.upper) + ',' + format_double(r.point) + '\n';
    }
    return out;
}

inline std::vector<AggregateRow> parse_aggregate_csv(std::string_view text) {
    const CsvTable t = parse_csv(text);
    std::vector<AggregateRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        rows.push_back({t.rows[i][t.column("method")], detail::cell_size(t, i, "n"), detail::cell_double(t, i, "coverage"),
                        detail::cell_double(t, i, "mean_width"), detail::cell_double(t, i, "ground_truth")});
    }
    return rows;
}

inline std::vector<DisplayedRow> parse_displayed_csv(std::string_view text) {
    const CsvTable t = parse_csv(text);
    std::vector<DisplayedRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        rows.push_back({t.rows[i][t.column("method")], detail::cell_size(t, i, "n"), detail::cell_size(t, i, "trial"),
                        detail::cell_double(t, i, "lower"), detail::cell_double(t, i, "upper"),
                        detail::cell_double(t, i, "point")});
    }
    return rows;
}

// {"aggregate": [...], "displayed": [...]} with the CSV column names as keys,
// in CSV column order.
inline nlohmann::ordered_json tables_to_json(const ReportTables& t) {
    nlohmann::ordered_json out;
    out["aggregate"] = nlohmann::ordered_json::array();
    for (const auto& r : t.aggregate) {
        nlohmann::ordered_json row;
        row["method"] = r.method;
        row["n"] = r.n;
        row["coverage"] = r.coverage;
        row["mean_width"] = r.mean_width;
        row["ground_truth"] = r.ground_truth;
        out["aggregate"].push_back(std::move(row));
    }
    out["displayed"] = nlohmann::ordered_json::array();
    for (const auto& r : t.displayed) {
        nlohmann::ordered_json row;
        row["method"] = r.method;
        row["n"] = r.n;
        row["trial"] = r.trial;
        row["lower"] = r.lower;
        row["upper"] = r.upper;
        row["point"] = r.point;
        out["displayed"].push_back(std::move(row));
    }
    return out;
}

inline ReportTables tables_from_json(const nlohmann::json& j) {
    ReportTables t;
    for (const auto& r : j.at("aggregate")) {
        t.aggregate.push_back({r.at("method").get<std::string>(), r.at("n").get<std::size_t>(),
                               r.at("coverage").get<double>(), r.at("mean_width").get<double>(),
                               r.at("ground_truth").get<double>()});
    }
    for (const auto& r : j.at("displayed")) {
        t.displayed.push_back({r.at("method").get<std::string>(), r.at("n").get<std::size_t>(),
                               r.at("trial").get<std::size_t>(), r.at("lower").get<double>(),
                               r.at("upper").get<double>(), r.at("point").get<double>()});
    }
    return t;
}

} // namespace ppboot
