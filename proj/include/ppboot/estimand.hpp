#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>

#include "error.hpp"

namespace ppboot {

struct MeanEstimand {};

struct QuantileEstimand {
    double q = 0.5;
};

// Coefficient of feature `target_index` in a least-squares fit of the
// response on all feature columns (plus an intercept column when enabled).
struct OlsCoefEstimand {
    std::size_t target_index = 0;
    bool intercept = true;
};

struct LogisticCoefEstimand {
    std::size_t target_index = 0;
    bool intercept = true;
};

// Log odds ratio between the binary feature `exposure_column` and the
// binary response.
struct LogOddsRatioEstimand {
    std::size_t exposure_column = 0;
};

// Pearson correlation between feature `feature_column` and the response.
struct PearsonCorrEstimand {
    std::size_t feature_column = 0;
};

using EstimandKind = std::variant<MeanEstimand, QuantileEstimand, OlsCoefEstimand, LogisticCoefEstimand,
                                  LogOddsRatioEstimand, PearsonCorrEstimand>;

// Monotone map applied to interval endpoints and point estimates at
// reporting time only.
enum class ReportTransform { identity, exp, fisher_z_inverse };

struct EstimandSpec {
    EstimandKind kind = MeanEstimand{};
    ReportTransform transform = ReportTransform::identity;

    static EstimandSpec mean() { return {MeanEstimand{}}; }
    static EstimandSpec quantile(double q) { return {QuantileEstimand{q}}; }
    static EstimandSpec ols_coef(std::size_t target, bool intercept = true) {
        return {OlsCoefEstimand{target, intercept}};
    }
    static EstimandSpec logistic_coef(std::size_t target, bool intercept = true) {
        return {LogisticCoefEstimand{target, intercept}};
    }
    // Bootstrapped on the log scale, reported as an odds ratio by default.
    static EstimandSpec log_odds_ratio(std::size_t exposure_column) {
        return {LogOddsRatioEstimand{exposure_column}, ReportTransform::exp};
    }
    static EstimandSpec pearson_corr(std::size_t feature_column) {
        return {PearsonCorrEstimand{feature_column}};
    }

    std::string name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, MeanEstimand>) return "mean";
                else if constexpr (std::is_same_v<K, QuantileEstimand>) return "quantile";
                else if constexpr (std::is_same_v<K, OlsCoefEstimand>) return "ols_coef";
                else if constexpr (std::is_same_v<K, LogisticCoefEstimand>) return "logistic_coef";
                else if constexpr (std::is_same_v<K, LogOddsRatioEstimand>) return "log_odds_ratio";
                else return "pearson_corr";
            },
            kind);
    }

    bool is_mean() const noexcept { return std::holds_alternative<MeanEstimand>(kind); }

    // Checks parameter ranges against a feature count.
    void validate(std::size_t dims) const {
        std::visit(
            [dims](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, QuantileEstimand>) {
                    if (!(k.q > 0.0 && k.q < 1.0)) {
                        throw ArgumentError("quantile level must lie strictly inside (0, 1)");
                    }
                } else if constexpr (std::is_same_v<K, OlsCoefEstimand> || std::is_same_v<K, LogisticCoefEstimand>) {
                    if (k.target_index >= dims) {
                        throw ArgumentError("target index " + std::to_string(k.target_index) +
                                            " is outside the " + std::to_string(dims) + " feature columns");
                    }
                } else if constexpr (std::is_same_v<K, LogOddsRatioEstimand>) {
                    if (k.exposure_column >= dims) {
                        throw ArgumentError("exposure column " + std::to_string(k.exposure_column) +
                                            " is outside the " + std::to_string(dims) + " feature columns");
                    }
                } else if constexpr (std::is_same_v<K, PearsonCorrEstimand>) {
                    if (k.feature_column >= dims) {
                        throw ArgumentError("feature column " + std::to_string(k.feature_column) +
                                            " is outside the " + std::to_string(dims) + " feature columns");
                    }
                }
            },
            kind);
    }
};

inline double apply_transform(ReportTransform t, double v) {
    switch (t) {
    case ReportTransform::exp:
        return std::exp(v);
    case ReportTransform::fisher_z_inverse:
        return std::tanh(v);
    case ReportTransform::identity:
        break;
    }
    return v;
}

inline const char* transform_name(ReportTransform t) {
    switch (t) {
    case ReportTransform::exp:
        return "exp";
    case ReportTransform::fisher_z_inverse:
        return "fisher_z_inverse";
    case ReportTransform::identity:
        break;
    }
    return "identity";
}

inline ReportTransform parse_transform(const std::string& name) {
    if (name == "identity") return ReportTransform::identity;
    if (name == "exp") return ReportTransform::exp;
    if (name == "fisher_z_inverse") return ReportTransform::fisher_z_inverse;
    throw ArgumentError("unknown report transform '" + name + "'");
}

} // namespace ppboot
