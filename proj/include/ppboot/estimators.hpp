#pragma once

// Scalar estimators theta-hat(features, response).
//
// Every estimator works on a SampleRef: a feature matrix, a response column
// (true outcomes or model predictions) and the list of rows to use. Bootstrap
// resamples are therefore just index vectors and nothing is copied. All sums
// go through ExactSum, so results do not depend on row order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "exact_sum.hpp"

namespace ppboot {

enum class EstimateStatus {
    ok,
    // Finite and usable, but an adjustment was applied (e.g. zero-cell correction).
    corrected,
    // No meaningful value; `value` is NaN.
    degenerate,
};

struct EstimateValue {
    double value = 0.0;
    EstimateStatus status = EstimateStatus::ok;
    const char* reason = "";

    bool usable() const noexcept { return status != EstimateStatus::degenerate; }

    static EstimateValue ok(double v) { return {v, EstimateStatus::ok, ""}; }
    static EstimateValue corrected(double v, const char* why) { return {v, EstimateStatus::corrected, why}; }
    static EstimateValue degenerate(const char* why) {
        return {std::numeric_limits<double>::quiet_NaN(), EstimateStatus::degenerate, why};
    }
};

// The rows of (features, response) an estimator should look at.
struct SampleRef {
    const Matrix& features;
    std::span<const double> response;
    std::span<const std::size_t> rows;

    std::size_t size() const noexcept { return rows.size(); }
    double y(std::size_t i) const { return response[rows[i]]; }
    double x(std::size_t i, std::size_t j) const {
        return features(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(j));
    }
};

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

namespace detail {

// 0-based index of the nearest-rank upper quantile: the ceil(q*len)-th
// order statistic, clamped to [1, len]. Products within 1e-9 (relative) of
// an integer are treated as that integer so that e.g. 0.95 * 1000 -> 950.
inline std::size_t nearest_rank_index(double q, std::size_t len) {
    const double x = q * static_cast<double>(len);
    const double nearest = std::round(x);
    const double rank = std::fabs(x - nearest) <= 1e-9 * std::max(1.0, std::fabs(x)) ? nearest : std::ceil(x);
    const double clamped = std::clamp(rank, 1.0, static_cast<double>(len));
    return static_cast<std::size_t>(clamped) - 1;
}

inline const Matrix& empty_matrix() {
    static const Matrix m(0, 0);
    return m;
}

inline bool is_binary(double v) noexcept { return v == 0.0 || v == 1.0; }

// Solves the symmetric positive semidefinite system a * beta = b after
// unit-diagonal scaling. Returns false when the system is (numerically)
// singular.
inline bool solve_normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& beta) {
    const Eigen::Index p = a.rows();
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(a(j, j) > 0.0) || !std::isfinite(a(j, j))) return false;
        scale(j) = 1.0 / std::sqrt(a(j, j));
    }
    const Eigen::MatrixXd scaled = scale.asDiagonal() * a * scale.asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) return false;
    beta = scale.asDiagonal() * qr.solve(scale.asDiagonal() * b);
    return beta.allFinite();
}

inline std::size_t design_width(const SampleRef& s, bool intercept) {
    return static_cast<std::size_t>(s.features.cols()) + (intercept ? 1 : 0);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Row-indexed kernels

inline EstimateValue est_mean(const SampleRef& s) {
    if (s.size() == 0) throw ArgumentError("mean of an empty sample");
    ExactSum acc;
    for (std::size_t i = 0; i < s.size(); ++i) acc.add(s.y(i));
    return EstimateValue::ok(acc.value() / static_cast<double>(s.size()));
}

inline EstimateValue est_quantile(const SampleRef& s, double q) {
    if (s.size() == 0) throw ArgumentError("quantile of an empty sample");
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("quantile level must lie strictly inside (0, 1)");
    thread_local std::vector<double> scratch;
    scratch.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) scratch[i] = s.y(i);
    const std::size_t k = detail::nearest_rank_index(q, scratch.size());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    return EstimateValue::ok(scratch[k]);
}

// Least-squares coefficients of the response on the feature columns (the
// intercept, when enabled, is the last entry). nullopt for a singular design.
inline std::optional<Eigen::VectorXd> fit_ols(const SampleRef& s, bool intercept) {
    const std::size_t d = static_cast<std::size_t>(s.features.cols());
    const std::size_t p = detail::design_width(s, intercept);
    if (s.size() < p) throw ArgumentError("OLS needs at least as many rows as design columns");

    // Upper triangle of X'X, then X'y.
    std::vector<ExactSum> xtx(p * (p + 1) / 2);
    std::vector<ExactSum> xty(p);
    std::vector<double> row(p);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) row[j] = s.x(i, j);
        if (intercept) row[d] = 1.0;
        const double y = s.y(i);
        std::size_t k = 0;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) xtx[k++].add_product(row[a], row[b]);
            xty[a].add_product(row[a], y);
        }
    }
    Eigen::MatrixXd a(p, p);
    Eigen::VectorXd b(p);
    std::size_t k = 0;
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = r; c < p; ++c) {
            const double v = xtx[k++].value();
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
            a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = v;
        }
        b(static_cast<Eigen::Index>(r)) = xty[r].value();
    }
    Eigen::VectorXd beta;
    if (!detail::solve_normal_equations(a, b, beta)) return std::nullopt;
    return beta;
}

inline EstimateValue est_ols_coef(const SampleRef& s, std::size_t target_index, bool intercept) {
    if (target_index >= static_cast<std::size_t>(s.features.cols())) throw ArgumentError("OLS target index out of range");
    const auto beta = fit_ols(s, intercept);
    if (!beta) return EstimateValue::degenerate("singular design");
    return EstimateValue::ok((*beta)(static_cast<Eigen::Index>(target_index)));
}

struct LogisticOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    // Any coefficient beyond this magnitude is taken as (quasi-)separation.
    double separation_bound = 50.0;
};

// Full coefficient vector of a logistic regression fitted by IRLS (Newton).
// The intercept, when enabled, is the last entry.
struct LogisticFit {
    Eigen::VectorXd coefficients;
    EstimateStatus status = EstimateStatus::ok;
    const char* reason = "";
    int iterations = 0;
};

inline LogisticFit fit_logistic(const SampleRef& s, bool intercept, const LogisticOptions& opts = {}) {
    const std::size_t d = static_cast<std::size_t>(s.features.cols());
    const std::size_t p = detail::design_width(s, intercept);
    if (s.size() < p) throw ArgumentError("logistic regression needs at least as many rows as design columns");

    LogisticFit fit;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double y = s.y(i);
        if (!detail::is_binary(y)) throw ArgumentError("logistic regression response must be 0 or 1");
        ones += y == 1.0 ? 1 : 0;
    }
    if (ones == 0 || ones == s.size()) {
        fit.status = EstimateStatus::degenerate;
        fit.reason = "constant outcome";
        return fit;
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    std::vector<double> row(p);
    std::vector<ExactSum> hess(p * (p + 1) / 2);
    std::vector<ExactSum> grad(p);
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd g(p);
    Eigen::VectorXd step;
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        std::fill(hess.begin(), hess.end(), ExactSum{});
        std::fill(grad.begin(), grad.end(), ExactSum{});
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) row[j] = s.x(i, j);
            if (intercept) row[d] = 1.0;
            double eta = 0.0;
            for (std::size_t j = 0; j < p; ++j) eta += row[j] * beta(static_cast<Eigen::Index>(j));
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double w = mu * (1.0 - mu);
            const double resid = s.y(i) - mu;
            std::size_t k = 0;
            for (std::size_t a = 0; a < p; ++a) {
                const double wa = w * row[a];
                for (std::size_t b = a; b < p; ++b) hess[k++].add_product(wa, row[b]);
                grad[a].add_product(row[a], resid);
            }
        }
        std::size_t k = 0;
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = r; c < p; ++c) {
                const double v = hess[k++].value();
                h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
                h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = v;
            }
            g(static_cast<Eigen::Index>(r)) = grad[r].value();
        }
        if (!detail::solve_normal_equations(h, g, step)) {
            fit.status = EstimateStatus::degenerate;
            fit.reason = "singular design";
            return fit;
        }
        beta += step;
        fit.iterations = iter;
        if (beta.cwiseAbs().maxCoeff() > opts.separation_bound) {
            fit.status = EstimateStatus::degenerate;
            fit.reason = "separation";
            return fit;
        }
        if (step.cwiseAbs().maxCoeff() < opts.tolerance) break;
    }
    fit.coefficients = std::move(beta);
    return fit;
}

inline EstimateValue est_logistic_coef(const SampleRef& s, std::size_t target_index, bool intercept) {
    if (target_index >= static_cast<std::size_t>(s.features.cols())) {
        throw ArgumentError("logistic target index out of range");
    }
    const LogisticFit fit = fit_logistic(s, intercept);
    if (fit.status == EstimateStatus::degenerate) return EstimateValue::degenerate(fit.reason);
    return EstimateValue::ok(fit.coefficients(static_cast<Eigen::Index>(target_index)));
}

inline EstimateValue est_log_odds_ratio(const SampleRef& s, std::size_t exposure_column) {
    if (exposure_column >= static_cast<std::size_t>(s.features.cols())) {
        throw ArgumentError("exposure column out of range");
    }
    if (s.size() < 4) throw ArgumentError("odds ratio needs at least 4 rows");
    // counts[exposure][outcome]
    double counts[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = s.x(i, exposure_column);
        const double y = s.y(i);
        if (!detail::is_binary(e) || !detail::is_binary(y)) {
            throw ArgumentError("odds ratio inputs must be 0 or 1");
        }
        counts[e == 1.0][y == 1.0] += 1.0;
    }
    const bool zero_cell = counts[0][0] == 0.0 || counts[0][1] == 0.0 || counts[1][0] == 0.0 || counts[1][1] == 0.0;
    if (zero_cell) {
        for (auto& r : counts) {
            for (double& c : r) c += 0.5;
        }
    }
    // Sum of logs rather than log of a ratio: flipping the outcome then
    // negates the result exactly.
    const double v = (std::log(counts[1][1]) + std::log(counts[0][0])) - (std::log(counts[1][0]) + std::log(counts[0][1]));
    if (zero_cell) return EstimateValue::corrected(v, "zero cell corrected");
    return EstimateValue::ok(v);
}

inline EstimateValue est_pearson_corr(const SampleRef& s, std::size_t feature_column) {
    if (feature_column >= static_cast<std::size_t>(s.features.cols())) {
        throw ArgumentError("correlation feature column out of range");
    }
    if (s.size() < 3) throw ArgumentError("correlation needs at least 3 rows");
    const auto n = static_cast<double>(s.size());
    ExactSum sx;
    ExactSum sy;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sx.add(s.x(i, feature_column));
        sy.add(s.y(i));
    }
    const double mx = sx.value() / n;
    const double my = sy.value() / n;
    ExactSum sxx;
    ExactSum syy;
    ExactSum sxy;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double dx = s.x(i, feature_column) - mx;
        const double dy = s.y(i) - my;
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    const double vxx = sxx.value();
    const double vyy = syy.value();
    if (vxx == 0.0 || vyy == 0.0) return EstimateValue::degenerate("constant variable");
    return EstimateValue::ok(sxy.value() / std::sqrt(vxx * vyy));
}

// Dispatches on the estimand kind.
inline EstimateValue evaluate(const EstimandSpec& spec, const SampleRef& s) {
    return std::visit(
        [&s](const auto& k) -> EstimateValue {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, MeanEstimand>) return est_mean(s);
            else if constexpr (std::is_same_v<K, QuantileEstimand>) return est_quantile(s, k.q);
            else if constexpr (std::is_same_v<K, OlsCoefEstimand>) return est_ols_coef(s, k.target_index, k.intercept);
            else if constexpr (std::is_same_v<K, LogisticCoefEstimand>)
                return est_logistic_coef(s, k.target_index, k.intercept);
            else if constexpr (std::is_same_v<K, LogOddsRatioEstimand>) return est_log_odds_ratio(s, k.exposure_column);
            else return est_pearson_corr(s, k.feature_column);
        },
        spec.kind);
}

// ---------------------------------------------------------------------------
// Whole-sample conveniences

inline EstimateValue est_mean(std::span<const double> outcomes) {
    const auto rows = all_rows(outcomes.size());
    return est_mean(SampleRef{detail::empty_matrix(), outcomes, rows});
}

inline EstimateValue est_quantile(std::span<const double> outcomes, double q) {
    const auto rows = all_rows(outcomes.size());
    return est_quantile(SampleRef{detail::empty_matrix(), outcomes, rows}, q);
}

inline EstimateValue est_ols_coef(const Matrix& features, std::span<const double> outcomes, std::size_t target_index,
                                  bool intercept) {
    if (static_cast<std::size_t>(features.rows()) != outcomes.size()) throw ArgumentError("row count mismatch");
    const auto rows = all_rows(outcomes.size());
    return est_ols_coef(SampleRef{features, outcomes, rows}, target_index, intercept);
}

inline EstimateValue est_logistic_coef(const Matrix& features, std::span<const double> outcomes,
                                       std::size_t target_index, bool intercept) {
    if (static_cast<std::size_t>(features.rows()) != outcomes.size()) throw ArgumentError("row count mismatch");
    const auto rows = all_rows(outcomes.size());
    return est_logistic_coef(SampleRef{features, outcomes, rows}, target_index, intercept);
}

inline EstimateValue est_log_odds_ratio(std::span<const double> exposure, std::span<const double> outcomes) {
    if (exposure.size() != outcomes.size()) throw ArgumentError("exposure and outcome lengths differ");
    Matrix x(static_cast<Eigen::Index>(exposure.size()), 1);
    for (std::size_t i = 0; i < exposure.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = exposure[i];
    const auto rows = all_rows(outcomes.size());
    return est_log_odds_ratio(SampleRef{x, outcomes, rows}, 0);
}

inline EstimateValue est_pearson_corr(const Matrix& features, std::span<const double> outcomes,
                                      std::size_t feature_column) {
    if (static_cast<std::size_t>(features.rows()) != outcomes.size()) throw ArgumentError("row count mismatch");
    const auto rows = all_rows(outcomes.size());
    return est_pearson_corr(SampleRef{features, outcomes, rows}, feature_column);
}

inline EstimateValue evaluate(const EstimandSpec& spec, const Matrix& features, std::span<const double> response) {
    if (static_cast<std::size_t>(features.rows()) != response.size()) throw ArgumentError("row count mismatch");
    const auto rows = all_rows(response.size());
    return evaluate(spec, SampleRef{features, response, rows});
}

} // namespace ppboot
