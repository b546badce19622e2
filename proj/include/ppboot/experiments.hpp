#pragma once

// Monte Carlo coverage studies.
//
// A fully labeled dataset stands in for the population: the estimand on all
// of it is the ground truth, and each trial hides the outcomes of all but a
// random n rows, runs every requested method, and records whether the
// interval covers the truth and how wide it is.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "baselines.hpp"
#include "crossfit.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "estimators.hpp"
#include "exact_sum.hpp"
#include "parallel.hpp"
#include "ppboot.hpp"
#include "rng.hpp"

namespace ppboot {

// ---------------------------------------------------------------------------
// Synthetic data

// X ~ N(0, I_d), Y = intercept + X . coef + noise_sd * N(0, 1).
struct GaussianLinearDgp {
    std::vector<double> coef{1.0};
    double noise_sd = 1.0;
    double intercept = 0.0;
};

// Y ~ Bernoulli(p); a single feature X = Y + N(0, 1).
struct BernoulliMeanDgp {
    double p = 0.5;
};

// (exposure, outcome) drawn from a 2x2 table; the exposure is feature 0.
// p<exposure><outcome>.
struct BinaryPairDgp {
    double p11 = 0.25;
    double p10 = 0.25;
    double p01 = 0.25;
    double p00 = 0.25;
};

// X ~ N(0, I_d), Y ~ Bernoulli(sigmoid(intercept + X . coef)).
struct LogisticDgp {
    std::vector<double> coef{1.0};
    double intercept = 0.0;
};

using Dgp = std::variant<GaussianLinearDgp, BernoulliMeanDgp, BinaryPairDgp, LogisticDgp>;

// Predictions equal to the outcomes.
struct OraclePredictions {};

// Predictions whose correlation with the outcome is about rho. Continuous
// outcomes get additive Gaussian noise; binary outcomes get symmetric label
// flips, so predictions stay binary.
struct NoisyTruthPredictions {
    double rho = 0.9;
};

// Outcome + offset + noise_sd * N(0, 1).
struct BiasedPredictions {
    double offset = 1.0;
    double noise_sd = 0.0;
};

// Drawn independently of everything else from the outcome's marginal shape:
// N(mean, sd) for continuous outcomes, Bernoulli(prevalence) for binary ones.
struct PureNoisePredictions {};

using PredictionModel = std::variant<OraclePredictions, NoisyTruthPredictions, BiasedPredictions, PureNoisePredictions>;

struct SyntheticSpec {
    Dgp dgp = BernoulliMeanDgp{};
    PredictionModel predictions = NoisyTruthPredictions{};
    std::size_t total_rows = 1000;

    void validate() const {
        if (total_rows < 10) throw ArgumentError("synthetic data needs at least 10 rows");
        std::visit(
            [](const auto& g) {
                using G = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<G, BernoulliMeanDgp>) {
                    if (!(g.p > 0.0 && g.p < 1.0)) throw ArgumentError("bernoulli_mean p must lie in (0, 1)");
                } else if constexpr (std::is_same_v<G, BinaryPairDgp>) {
                    for (double p : {g.p11, g.p10, g.p01, g.p00}) {
                        if (!(p > 0.0 && p < 1.0)) throw ArgumentError("binary_pair cell probabilities must lie in (0, 1)");
                    }
                    if (std::fabs(g.p11 + g.p10 + g.p01 + g.p00 - 1.0) > 1e-9) {
                        throw ArgumentError("binary_pair cell probabilities must sum to 1");
                    }
                } else if constexpr (std::is_same_v<G, GaussianLinearDgp>) {
                    if (g.coef.empty()) throw ArgumentError("gaussian_linear needs at least one coefficient");
                    if (!(g.noise_sd >= 0.0)) throw ArgumentError("gaussian_linear noise_sd must be non-negative");
                } else {
                    if (g.coef.empty()) throw ArgumentError("logistic needs at least one coefficient");
                }
            },
            dgp);
        if (const auto* nt = std::get_if<NoisyTruthPredictions>(&predictions)) {
            if (!(nt->rho > 0.0 && nt->rho <= 1.0)) throw ArgumentError("noisy_truth rho must lie in (0, 1]");
        }
        if (const auto* b = std::get_if<BiasedPredictions>(&predictions)) {
            if (!(b->noise_sd >= 0.0)) throw ArgumentError("biased noise_sd must be non-negative");
        }
    }

    bool binary_outcome() const { return !std::holds_alternative<GaussianLinearDgp>(dgp); }
};

namespace detail {

// Correlation between Y ~ Bernoulli(p) and Y xor Bernoulli(eps).
inline double flip_correlation(double p, double eps) {
    const double q = p * (1.0 - eps) + (1.0 - p) * eps;
    return p * (1.0 - p) * (1.0 - 2.0 * eps) / std::sqrt(p * (1.0 - p) * q * (1.0 - q));
}

// Flip probability giving correlation rho (bisection on [0, 1/2]).
inline double flip_probability_for(double p, double rho) {
    if (rho >= 1.0) return 0.0;
    double lo = 0.0;
    double hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (flip_correlation(p, mid) > rho) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace detail

// Fully labeled data with a prediction column, deterministic given the
// stream (uses its synthetic phase).
inline LabeledDataset generate_synthetic(const SyntheticSpec& spec, const RngStream& stream) {
    spec.validate();
    const std::size_t n = spec.total_rows;
    auto data_rng = stream.child(Phase::synthetic).child(0).engine();
    auto pred_rng = stream.child(Phase::synthetic).child(1).engine();

    Matrix x;
    std::vector<double> y(n);
    std::visit(
        [&](const auto& g) {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, GaussianLinearDgp> || std::is_same_v<G, LogisticDgp>) {
                const auto d = static_cast<Eigen::Index>(g.coef.size());
                x.resize(static_cast<Eigen::Index>(n), d);
                for (std::size_t i = 0; i < n; ++i) {
                    double eta = g.intercept;
                    for (Eigen::Index j = 0; j < d; ++j) {
                        const double v = data_rng.normal();
                        x(static_cast<Eigen::Index>(i), j) = v;
                        eta += g.coef[static_cast<std::size_t>(j)] * v;
                    }
                    if constexpr (std::is_same_v<G, GaussianLinearDgp>) {
                        y[i] = eta + g.noise_sd * data_rng.normal();
                    } else {
                        y[i] = data_rng.bernoulli(detail::sigmoid(eta)) ? 1.0 : 0.0;
                    }
                }
            } else if constexpr (std::is_same_v<G, BernoulliMeanDgp>) {
                x.resize(static_cast<Eigen::Index>(n), 1);
                for (std::size_t i = 0; i < n; ++i) {
                    y[i] = data_rng.bernoulli(g.p) ? 1.0 : 0.0;
                    x(static_cast<Eigen::Index>(i), 0) = y[i] + data_rng.normal();
                }
            } else {
                x.resize(static_cast<Eigen::Index>(n), 1);
                for (std::size_t i = 0; i < n; ++i) {
                    const double u = data_rng.uniform_open01();
                    double exposure = 0.0;
                    double outcome = 0.0;
                    if (u < g.p11) {
                        exposure = 1.0;
                        outcome = 1.0;
                    } else if (u < g.p11 + g.p10) {
                        exposure = 1.0;
                    } else if (u < g.p11 + g.p10 + g.p01) {
                        outcome = 1.0;
                    }
                    x(static_cast<Eigen::Index>(i), 0) = exposure;
                    y[i] = outcome;
                }
            }
        },
        spec.dgp);

    const bool binary = spec.binary_outcome();
    const double mean_y = exact_sum(y) / static_cast<double>(n);
    ExactSum ss;
    for (double v : y) ss.add((v - mean_y) * (v - mean_y));
    const double sd_y = std::sqrt(ss.value() / static_cast<double>(n - 1));

    std::vector<double> f(n);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, OraclePredictions>) {
                f = y;
            } else if constexpr (std::is_same_v<M, NoisyTruthPredictions>) {
                if (binary) {
                    const double eps = mean_y > 0.0 && mean_y < 1.0 ? detail::flip_probability_for(mean_y, m.rho) : 0.0;
                    for (std::size_t i = 0; i < n; ++i) f[i] = pred_rng.bernoulli(eps) ? 1.0 - y[i] : y[i];
                } else {
                    const double sigma = sd_y * std::sqrt(1.0 / (m.rho * m.rho) - 1.0);
                    for (std::size_t i = 0; i < n; ++i) f[i] = y[i] + sigma * pred_rng.normal();
                }
            } else if constexpr (std::is_same_v<M, BiasedPredictions>) {
                for (std::size_t i = 0; i < n; ++i) f[i] = y[i] + m.offset + m.noise_sd * pred_rng.normal();
            } else {
                if (binary) {
                    for (std::size_t i = 0; i < n; ++i) f[i] = pred_rng.bernoulli(mean_y) ? 1.0 : 0.0;
                } else {
                    for (std::size_t i = 0; i < n; ++i) f[i] = mean_y + sd_y * pred_rng.normal();
                }
            }
        },
        spec.predictions);

    return LabeledDataset(std::move(x), std::move(y), std::move(f));
}

// ---------------------------------------------------------------------------
// Coverage study

enum class Method {
    classical_bootstrap,
    classical_clt,
    ppboot,
    ppboot_tuned,
    imputed,
    ppi_mean,
    cross_ppboot,
    split_ppboot,
};

inline const char* method_name(Method m) {
    switch (m) {
    case Method::classical_bootstrap:
        return "classical";
    case Method::classical_clt:
        return "classical-clt";
    case Method::ppboot:
        return "ppboot";
    case Method::ppboot_tuned:
        return "ppboot-tuned";
    case Method::imputed:
        return "imputed";
    case Method::ppi_mean:
        return "ppi-mean";
    case Method::cross_ppboot:
        return "cross-ppboot";
    case Method::split_ppboot:
        return "split-ppboot";
    }
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    for (Method m : {Method::classical_bootstrap, Method::classical_clt, Method::ppboot, Method::ppboot_tuned,
                     Method::imputed, Method::ppi_mean, Method::cross_ppboot, Method::split_ppboot}) {
        if (name == method_name(m)) return m;
    }
    throw ArgumentError("unknown method '" + name + "'");
}

struct CrossFitConfig {
    std::size_t K = 10;
    LearnerSpec learner = LinearLearnerSpec{};
    // Share of labeled rows used for training by the data-splitting baseline.
    double train_fraction = 0.5;
};

struct TrialConfig {
    std::vector<std::size_t> n_grid;
    std::size_t trials = 100;
    std::vector<Method> methods;
    EstimandSpec estimand;
    BootstrapConfig bootstrap;
    CrossFitConfig crossfit;
    // Intervals of the first `displayed_trials` trials at `display_n`
    // (default: first grid value) are kept for plotting.
    std::size_t displayed_trials = 3;
    std::optional<std::size_t> display_n;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
    // A method failing on more than this share of trials fails the study.
    double max_failure_rate = 0.1;
};

struct MethodSummary {
    std::string method;
    std::size_t n = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double ground_truth = 0.0;
    std::size_t trials = 0;   // trials with a usable interval
    std::size_t covered = 0;
    std::size_t failed = 0;
};

struct DisplayedInterval {
    std::string method;
    std::size_t n = 0;
    std::size_t trial = 0;
    double lower = 0.0;
    double upper = 0.0;
    double point = 0.0;
};

struct TrialSummary {
    double ground_truth = 0.0;
    std::vector<MethodSummary> cells;  // method-major, then n in grid order
    std::vector<DisplayedInterval> displayed;

    const MethodSummary& cell(Method m, std::size_t n) const {
        for (const auto& c : cells) {
            if (c.method == method_name(m) && c.n == n) return c;
        }
        throw ArgumentError(std::string("no summary for method ") + method_name(m) + " at n=" + std::to_string(n));
    }
};

// Stream owning all randomness of trial t at labeled size n.
inline RngStream trial_stream(std::uint64_t master_seed, std::size_t n, std::size_t trial) {
    return RngStream(master_seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial)});
}

// Interval of one method for one split, on the estimation scale.
inline ConfidenceInterval run_method(Method method, const TrialSplit& split, const TrialConfig& config,
                                     const RngStream& stream) {
    BootstrapConfig cfg = config.bootstrap;
    cfg.threads = 1;
    switch (method) {
    case Method::classical_bootstrap:
        return classical_bootstrap_interval(split.labeled, config.estimand, cfg, stream);
    case Method::classical_clt:
        if (!config.estimand.is_mean()) throw ArgumentError("classical-clt supports the mean estimand only");
        return classical_clt_mean_interval(split.labeled.outcomes(), cfg.alpha);
    case Method::ppboot:
        return ppboot_interval(split.labeled, split.unlabeled, config.estimand, cfg, stream);
    case Method::ppboot_tuned:
        cfg.lambda_mode = TunedLambda{};
        return ppboot_interval(split.labeled, split.unlabeled, config.estimand, cfg, stream);
    case Method::imputed:
        return imputed_interval(split.unlabeled, config.estimand, cfg, stream);
    case Method::ppi_mean:
        if (!config.estimand.is_mean()) throw ArgumentError("ppi-mean supports the mean estimand only");
        return ppi_mean_interval(split.labeled, split.unlabeled, cfg.alpha);
    case Method::cross_ppboot: {
        const auto learner = make_learner(config.crossfit.learner);
        return cross_ppboot_interval(split.labeled.features(), split.labeled.outcomes(), split.unlabeled.features(),
                                     config.estimand, cfg, config.crossfit.K, *learner, stream);
    }
    case Method::split_ppboot: {
        const auto learner = make_learner(config.crossfit.learner);
        return split_ppboot_interval(split.labeled.features(), split.labeled.outcomes(), split.unlabeled.features(),
                                     config.estimand, cfg, *learner, config.crossfit.train_fraction, stream);
    }
    }
    throw ArgumentError("unknown method");
}

inline TrialSummary run_coverage_study(const LabeledDataset& data, const TrialConfig& config) {
    if (config.trials < 1) throw ArgumentError("a study needs at least one trial");
    if (config.n_grid.empty()) throw ArgumentError("a study needs at least one labeled size");
    if (config.methods.empty()) throw ArgumentError("a study needs at least one method");
    config.bootstrap.validate();
    config.estimand.validate(data.dims());
    for (std::size_t n : config.n_grid) {
        if (n < 2 || n + 2 > data.size()) {
            throw ArgumentError("labeled size " + std::to_string(n) + " leaves fewer than 2 unlabeled rows out of " +
                                std::to_string(data.size()));
        }
    }

    const EstimateValue truth_raw = evaluate(config.estimand, data.features(), data.outcomes());
    if (!truth_raw.usable()) {
        throw DegenerateError(std::string("estimand is degenerate on the full dataset: ") + truth_raw.reason);
    }
    TrialSummary summary;
    summary.ground_truth = apply_transform(config.estimand.transform, truth_raw.value);

    struct Record {
        bool ok = false;
        double lower = 0.0;
        double upper = 0.0;
        double point = 0.0;
    };
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_sizes = config.n_grid.size();
    // records[(size_index * trials + t) * n_methods + m]
    std::vector<Record> records(n_sizes * config.trials * n_methods);

    parallel_for(n_sizes * config.trials, config.threads, [&](std::size_t task) {
        const std::size_t size_index = task / config.trials;
        const std::size_t t = task % config.trials;
        const std::size_t n = config.n_grid[size_index];
        const RngStream stream = trial_stream(config.master_seed, n, t);
        const TrialSplit split = split_trial(data, n, stream.child(Phase::split));
        for (std::size_t m = 0; m < n_methods; ++m) {
            Record& rec = records[task * n_methods + m];
            try {
                const ConfidenceInterval ci =
                    to_report_scale(run_method(config.methods[m], split, config, stream), config.estimand);
                rec = {true, ci.lower, ci.upper, ci.point_estimate};
            } catch (const InferenceError&) {
                rec.ok = false;
            }
        }
    });

    const std::size_t display_n = config.display_n.value_or(config.n_grid.front());
    for (std::size_t m = 0; m < n_methods; ++m) {
        for (std::size_t s = 0; s < n_sizes; ++s) {
            MethodSummary cell;
            cell.method = method_name(config.methods[m]);
            cell.n = config.n_grid[s];
            cell.ground_truth = summary.ground_truth;
            ExactSum widths;
            for (std::size_t t = 0; t < config.trials; ++t) {
                const Record& rec = records[(s * config.trials + t) * n_methods + m];
                if (!rec.ok) {
                    ++cell.failed;
                    continue;
                }
                ++cell.trials;
                widths.add(rec.upper - rec.lower);
                if (rec.lower <= summary.ground_truth && summary.ground_truth <= rec.upper) ++cell.covered;
            }
            if (static_cast<double>(cell.failed) > config.max_failure_rate * static_cast<double>(config.trials) ||
                cell.trials == 0) {
                throw StudyError("method " + cell.method + " failed on " + std::to_string(cell.failed) + " of " +
                                     std::to_string(config.trials) + " trials at n=" + std::to_string(cell.n),
                                 cell.method);
            }
            cell.coverage = static_cast<double>(cell.covered) / static_cast<double>(cell.trials);
            cell.mean_width = widths.value() / static_cast<double>(cell.trials);
            summary.cells.push_back(std::move(cell));
        }
    }

    for (std::size_t s = 0; s < n_sizes; ++s) {
        if (config.n_grid[s] != display_n) continue;
        const std::size_t shown = std::min(config.displayed_trials, config.trials);
        for (std::size_t m = 0; m < n_methods; ++m) {
            for (std::size_t t = 0; t < shown; ++t) {
                const Record& rec = records[(s * config.trials + t) * n_methods + m];
                if (!rec.ok) continue;
                summary.displayed.push_back({method_name(config.methods[m]), config.n_grid[s], t, rec.lower,
                                             rec.upper, rec.point});
            }
        }
        break;
    }
    return summary;
}

} // namespace ppboot
