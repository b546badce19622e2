#pragma once

// Prediction-powered bootstrap.
//
// Each iteration resamples the labeled and unlabeled rows with replacement
// and combines three applications of the same estimator,
//
//     theta*_b = lambda * est(X~*, f(X~*)) + (est(X*, Y*) - lambda * est(X*, f(X*))),
//
// and the interval is the percentile interval of the theta*_b. lambda = 1 is
// the basic method, lambda = 0 is the classical percentile bootstrap, and a
// tuned lambda minimises the variance of theta*_b estimated from a separate
// pilot bootstrap.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "estimators.hpp"
#include "exact_sum.hpp"
#include "parallel.hpp"
#include "resampling.hpp"
#include "rng.hpp"

namespace ppboot {

// lambda = 1 (no power tuning).
struct UntunedLambda {};
struct FixedLambda {
    double value = 1.0;
};
struct TunedLambda {};

using LambdaMode = std::variant<UntunedLambda, FixedLambda, TunedLambda>;

struct BootstrapConfig {
    std::size_t B = 1000;
    double alpha = 0.1;
    LambdaMode lambda_mode = UntunedLambda{};
    // Pilot bootstrap size for lambda tuning; B when unset.
    std::optional<std::size_t> tuning_B;
    std::uint64_t master_seed = 0;
    int max_degenerate_retries = 10;
    // Clamp a tuned lambda to [0, 1].
    bool clip_lambda = false;
    unsigned threads = 1;

    std::size_t effective_tuning_B() const { return tuning_B.value_or(B); }

    void validate() const {
        if (B < 2) throw ArgumentError("bootstrap iterations B must be at least 2");
        if (effective_tuning_B() < 2) throw ArgumentError("tuning iterations must be at least 2");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie strictly inside (0, 1)");
        if (max_degenerate_retries < 0) throw ArgumentError("max_degenerate_retries must be non-negative");
    }
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double point_estimate = 0.0;
    double lambda_used = 1.0;
    std::size_t degenerate_iterations = 0;
    double alpha = 0.1;
    // Set when the interval is valid but collapsed (e.g. zero variance).
    bool flagged = false;

    double width() const noexcept { return upper - lower; }
    bool contains(double v) const noexcept { return lower <= v && v <= upper; }
};

// Retained bootstrap replicates, in iteration order.
struct BootstrapDraws {
    std::vector<double> values;
    std::size_t degenerate_iterations = 0;
};

namespace detail {

// Runs `iterations` resampling iterations. Iteration b, attempt a uses the
// stream phase_stream/b/a, so results do not depend on threads or order.
// eval(labeled_idx, unlabeled_idx) returns nullopt for a degenerate
// resample, which is redrawn up to `retries` times and then dropped.
// An unlabeled size of zero skips the unlabeled draw.
template <class Result, class Eval>
std::vector<std::optional<Result>> run_resampling(std::size_t iterations, const RngStream& phase_stream, int retries,
                                                  unsigned threads, std::size_t n, std::size_t n_unlabeled,
                                                  Eval&& eval) {
    std::vector<std::optional<Result>> out(iterations);
    parallel_for(iterations, threads, [&](std::size_t b) {
        thread_local std::vector<std::size_t> labeled_idx;
        thread_local std::vector<std::size_t> unlabeled_idx;
        const RngStream iteration_stream = phase_stream.child(b);
        for (int attempt = 0; attempt <= retries; ++attempt) {
            const RngStream s = iteration_stream.child(static_cast<std::uint64_t>(attempt));
            draw_labeled(n, s, labeled_idx);
            if (n_unlabeled > 0) {
                draw_unlabeled(n_unlabeled, s, unlabeled_idx);
            } else {
                unlabeled_idx.clear();
            }
            std::optional<Result> r = eval(std::span<const std::size_t>(labeled_idx),
                                           std::span<const std::size_t>(unlabeled_idx));
            if (r) {
                out[b] = std::move(r);
                return;
            }
        }
    });
    return out;
}

inline BootstrapDraws collect(std::vector<std::optional<double>>&& raw) {
    BootstrapDraws draws;
    draws.values.reserve(raw.size());
    for (auto& v : raw) {
        if (v) {
            draws.values.push_back(*v);
        } else {
            ++draws.degenerate_iterations;
        }
    }
    return draws;
}

inline ConfidenceInterval percentile_interval(const BootstrapDraws& draws, std::size_t B, double alpha) {
    if (2 * draws.values.size() < B) {
        throw BootstrapFailure("only " + std::to_string(draws.values.size()) + " of " + std::to_string(B) +
                               " bootstrap iterations were usable");
    }
    ConfidenceInterval ci;
    ci.lower = empirical_quantile(draws.values, alpha / 2.0);
    ci.upper = empirical_quantile(draws.values, 1.0 - alpha / 2.0);
    ci.degenerate_iterations = draws.degenerate_iterations;
    ci.alpha = alpha;
    return ci;
}

// lambda * u + (y - lambda * l); grouped so that u is returned exactly when
// lambda = 1 and the labeled terms coincide.
inline double combine(double lambda, double unlabeled_pred, double labeled_outcome, double labeled_pred) {
    return lambda * unlabeled_pred + (labeled_outcome - lambda * labeled_pred);
}

inline void require_compatible(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                               const EstimandSpec& spec) {
    require_matching_dims(labeled, unlabeled);
    spec.validate(labeled.dims());
}

} // namespace detail

// Classical percentile-bootstrap replicates est(X*, Y*) of a single sample.
// Uses the same streams as the labeled half of the prediction-powered draws.
inline BootstrapDraws classical_bootstrap_draws(const Matrix& features, std::span<const double> response,
                                                const EstimandSpec& spec, const BootstrapConfig& cfg,
                                                const RngStream& stream) {
    cfg.validate();
    spec.validate(static_cast<std::size_t>(features.cols()));
    auto raw = detail::run_resampling<double>(
        cfg.B, stream.child(Phase::main), cfg.max_degenerate_retries, cfg.threads, response.size(), 0,
        [&](std::span<const std::size_t> rows, std::span<const std::size_t>) -> std::optional<double> {
            const EstimateValue v = evaluate(spec, SampleRef{features, response, rows});
            if (!v.usable()) return std::nullopt;
            return v.value;
        });
    return detail::collect(std::move(raw));
}

// theta*_b for a fixed multiplier. With lambda = 0 the prediction terms are
// never evaluated (they carry zero weight), so the draws coincide with the
// classical bootstrap of the labeled outcomes.
inline BootstrapDraws ppboot_draws(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                                   const EstimandSpec& spec, double lambda, const BootstrapConfig& cfg,
                                   const RngStream& stream) {
    cfg.validate();
    detail::require_compatible(labeled, unlabeled, spec);
    const bool use_predictions = lambda != 0.0;
    auto raw = detail::run_resampling<double>(
        cfg.B, stream.child(Phase::main), cfg.max_degenerate_retries, cfg.threads, labeled.size(),
        use_predictions ? unlabeled.size() : 0,
        [&](std::span<const std::size_t> lab, std::span<const std::size_t> unl) -> std::optional<double> {
            const EstimateValue y = evaluate(spec, SampleRef{labeled.features(), labeled.outcomes(), lab});
            if (!y.usable()) return std::nullopt;
            if (!use_predictions) return y.value;
            const EstimateValue l = evaluate(spec, SampleRef{labeled.features(), labeled.predictions(), lab});
            if (!l.usable()) return std::nullopt;
            const EstimateValue u = evaluate(spec, SampleRef{unlabeled.features(), unlabeled.predictions(), unl});
            if (!u.usable()) return std::nullopt;
            return detail::combine(lambda, u.value, y.value, l.value);
        });
    return detail::collect(std::move(raw));
}

// lambda * est(X~, f(X~)) + est(X, Y) - lambda * est(X, f(X)) on the
// original data.
inline double ppboot_point_estimate(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                                    const EstimandSpec& spec, double lambda = 1.0) {
    detail::require_compatible(labeled, unlabeled, spec);
    auto checked = [&](const EstimateValue& v, const char* which) {
        if (!v.usable()) {
            throw DegenerateError(std::string("estimator is degenerate on the ") + which + ": " + v.reason);
        }
        return v.value;
    };
    const double y = checked(evaluate(spec, labeled.features(), labeled.outcomes()), "labeled outcomes");
    if (lambda == 0.0) return y;
    const double l = checked(evaluate(spec, labeled.features(), labeled.predictions()), "labeled predictions");
    const double u = checked(evaluate(spec, unlabeled.features(), unlabeled.predictions()), "unlabeled predictions");
    return detail::combine(lambda, u, y, l);
}

// One pilot-bootstrap observation.
struct TuningTriple {
    double labeled_pred;
    double labeled_outcome;
    double unlabeled_pred;
};

// Plug-in variance-minimising multiplier
//   Cov(est(X*,f(X*)), est(X*,Y*)) / (Var(est(X*,f(X*))) + Var(est(X~*,f(X~*))))
// from tuning_B pilot resamples drawn on the tuning phase of `stream`.
// Degenerate resamples are dropped. Returns 0 when the denominator is below
// 1e-15.
inline double tune_lambda(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                          const EstimandSpec& spec, std::size_t tuning_B, const RngStream& stream,
                          unsigned threads = 1) {
    if (tuning_B < 2) throw ArgumentError("tuning iterations must be at least 2");
    detail::require_compatible(labeled, unlabeled, spec);
    auto raw = detail::run_resampling<TuningTriple>(
        tuning_B, stream.child(Phase::tuning), 0, threads, labeled.size(), unlabeled.size(),
        [&](std::span<const std::size_t> lab, std::span<const std::size_t> unl) -> std::optional<TuningTriple> {
            const EstimateValue l = evaluate(spec, SampleRef{labeled.features(), labeled.predictions(), lab});
            const EstimateValue y = evaluate(spec, SampleRef{labeled.features(), labeled.outcomes(), lab});
            const EstimateValue u = evaluate(spec, SampleRef{unlabeled.features(), unlabeled.predictions(), unl});
            if (!l.usable() || !y.usable() || !u.usable()) return std::nullopt;
            return TuningTriple{l.value, y.value, u.value};
        });

    std::vector<TuningTriple> triples;
    triples.reserve(raw.size());
    for (auto& t : raw) {
        if (t) triples.push_back(*t);
    }
    if (triples.size() < 2) {
        throw TuningFailure("only " + std::to_string(triples.size()) + " usable tuning resamples");
    }
    const auto m = static_cast<double>(triples.size());
    ExactSum sum_l;
    ExactSum sum_y;
    ExactSum sum_u;
    for (const auto& t : triples) {
        sum_l.add(t.labeled_pred);
        sum_y.add(t.labeled_outcome);
        sum_u.add(t.unlabeled_pred);
    }
    const double mean_l = sum_l.value() / m;
    const double mean_y = sum_y.value() / m;
    const double mean_u = sum_u.value() / m;
    ExactSum cov_ly;
    ExactSum var_l;
    ExactSum var_u;
    for (const auto& t : triples) {
        const double dl = t.labeled_pred - mean_l;
        cov_ly.add(dl * (t.labeled_outcome - mean_y));
        var_l.add(dl * dl);
        var_u.add((t.unlabeled_pred - mean_u) * (t.unlabeled_pred - mean_u));
    }
    const double denom = (var_l.value() + var_u.value()) / (m - 1.0);
    if (denom < 1e-15) return 0.0;
    return (cov_ly.value() / (m - 1.0)) / denom;
}

// Resolves the multiplier for a configuration, running the pilot bootstrap
// in tuned mode.
inline double resolve_lambda(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                             const EstimandSpec& spec, const BootstrapConfig& cfg, const RngStream& stream) {
    return std::visit(
        [&](const auto& mode) -> double {
            using M = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<M, UntunedLambda>) {
                return 1.0;
            } else if constexpr (std::is_same_v<M, FixedLambda>) {
                return mode.value;
            } else {
                double lambda = tune_lambda(labeled, unlabeled, spec, cfg.effective_tuning_B(), stream, cfg.threads);
                if (cfg.clip_lambda) lambda = std::clamp(lambda, 0.0, 1.0);
                return lambda;
            }
        },
        cfg.lambda_mode);
}

inline ConfidenceInterval ppboot_interval(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                                          const EstimandSpec& spec, const BootstrapConfig& cfg,
                                          const RngStream& stream) {
    cfg.validate();
    detail::require_compatible(labeled, unlabeled, spec);
    const double lambda = resolve_lambda(labeled, unlabeled, spec, cfg, stream);
    const double point = ppboot_point_estimate(labeled, unlabeled, spec, lambda);
    const BootstrapDraws draws = ppboot_draws(labeled, unlabeled, spec, lambda, cfg, stream);
    ConfidenceInterval ci = detail::percentile_interval(draws, cfg.B, cfg.alpha);
    ci.point_estimate = point;
    ci.lambda_used = lambda;
    return ci;
}

// Maps an interval to the reporting scale of its estimand. Correlation
// intervals are intersected with [-1, 1].
inline ConfidenceInterval to_report_scale(ConfidenceInterval ci, const EstimandSpec& spec) {
    ci.lower = apply_transform(spec.transform, ci.lower);
    ci.upper = apply_transform(spec.transform, ci.upper);
    ci.point_estimate = apply_transform(spec.transform, ci.point_estimate);
    if (std::holds_alternative<PearsonCorrEstimand>(spec.kind)) {
        ci.lower = std::clamp(ci.lower, -1.0, 1.0);
        ci.upper = std::clamp(ci.upper, -1.0, 1.0);
    }
    return ci;
}

} // namespace ppboot
