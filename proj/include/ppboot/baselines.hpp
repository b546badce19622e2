#pragma once

// Reference methods the prediction-powered bootstrap is compared against.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "estimators.hpp"
#include "exact_sum.hpp"
#include "normal.hpp"
#include "ppboot.hpp"

namespace ppboot {

namespace detail {

struct MeanVar {
    double mean;
    double variance; // unbiased
};

inline MeanVar mean_and_variance(std::span<const double> v) {
    const auto n = static_cast<double>(v.size());
    const double mean = exact_sum(v) / n;
    ExactSum ss;
    for (double x : v) ss.add((x - mean) * (x - mean));
    return {mean, ss.value() / (n - 1.0)};
}

inline ConfidenceInterval centered_interval(double center, double half_width, double alpha, double lambda) {
    ConfidenceInterval ci;
    ci.lower = center - half_width;
    ci.upper = center + half_width;
    ci.point_estimate = center;
    ci.alpha = alpha;
    ci.lambda_used = lambda;
    ci.flagged = half_width == 0.0;
    return ci;
}

inline void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie strictly inside (0, 1)");
}

} // namespace detail

// mean +/- z_{1-alpha/2} * sqrt(s^2 / n). A zero-variance sample gives a
// zero-width interval with `flagged` set.
inline ConfidenceInterval classical_clt_mean_interval(std::span<const double> outcomes, double alpha) {
    if (outcomes.size() < 2) throw ArgumentError("CLT interval needs at least 2 observations");
    detail::require_alpha(alpha);
    const auto mv = detail::mean_and_variance(outcomes);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double half = z * std::sqrt(mv.variance / static_cast<double>(outcomes.size()));
    return detail::centered_interval(mv.mean, half, alpha, 0.0);
}

// Percentile bootstrap of est(X*, Y*) on the labeled data alone.
inline ConfidenceInterval classical_bootstrap_interval(const LabeledDataset& labeled, const EstimandSpec& spec,
                                                       const BootstrapConfig& cfg, const RngStream& stream) {
    cfg.validate();
    spec.validate(labeled.dims());
    const EstimateValue point = evaluate(spec, labeled.features(), labeled.outcomes());
    if (!point.usable()) throw DegenerateError(std::string("estimator is degenerate on the labeled outcomes: ") + point.reason);
    const BootstrapDraws draws = classical_bootstrap_draws(labeled.features(), labeled.outcomes(), spec, cfg, stream);
    ConfidenceInterval ci = detail::percentile_interval(draws, cfg.B, cfg.alpha);
    ci.point_estimate = point.value;
    ci.lambda_used = 0.0;
    return ci;
}

// Treats the unlabeled predictions as if they were observed outcomes.
// Invalid whenever the predictions are biased; kept as a cautionary
// baseline.
inline ConfidenceInterval imputed_interval(const UnlabeledDataset& unlabeled, const EstimandSpec& spec,
                                           const BootstrapConfig& cfg, const RngStream& stream) {
    cfg.validate();
    spec.validate(unlabeled.dims());
    const EstimateValue point = evaluate(spec, unlabeled.features(), unlabeled.predictions());
    if (!point.usable()) {
        throw DegenerateError(std::string("estimator is degenerate on the unlabeled predictions: ") + point.reason);
    }
    const BootstrapDraws draws =
        classical_bootstrap_draws(unlabeled.features(), unlabeled.predictions(), spec, cfg, stream);
    ConfidenceInterval ci = detail::percentile_interval(draws, cfg.B, cfg.alpha);
    ci.point_estimate = point.value;
    ci.lambda_used = 1.0;
    return ci;
}

// CLT interval for a mean from predictions plus a rectifier:
//   center = mean(f(X~)) + mean(Y - f(X))
//   half   = z * sqrt(var(f(X~)) / N + var(Y - f(X)) / n)
inline ConfidenceInterval ppi_mean_interval(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                                            double alpha) {
    if (labeled.size() < 2 || unlabeled.size() < 2) throw ArgumentError("PPI mean interval needs n, N >= 2");
    detail::require_alpha(alpha);
    std::vector<double> rectifier(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        rectifier[i] = labeled.outcomes()[i] - labeled.predictions()[i];
    }
    const auto pred = detail::mean_and_variance(unlabeled.predictions());
    const auto rect = detail::mean_and_variance(rectifier);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double half = z * std::sqrt(pred.variance / static_cast<double>(unlabeled.size()) +
                                      rect.variance / static_cast<double>(labeled.size()));
    return detail::centered_interval(pred.mean + rect.mean, half, alpha, 1.0);
}

} // namespace ppboot
