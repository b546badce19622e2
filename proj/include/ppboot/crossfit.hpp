#pragma once

// Cross-fitted prediction-powered bootstrap.
//
// With no pre-trained model, the labeled rows are split into K folds and K
// models are trained, model j on every fold except j. Each labeled row is
// predicted by the model that did not see it, each unlabeled row by the
// average of all K models, and the resulting prediction columns are handed
// to the ordinary prediction-powered bootstrap. Models are trained once,
// never per resample.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "exact_sum.hpp"
#include "parallel.hpp"
#include "ppboot.hpp"
#include "rng.hpp"

namespace ppboot {

struct FoldAssignment {
    std::size_t K = 0;
    std::vector<std::size_t> fold_of;

    std::size_t size() const noexcept { return fold_of.size(); }

    std::vector<std::size_t> rows_in(std::size_t fold) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < fold_of.size(); ++i) {
            if (fold_of[i] == fold) rows.push_back(i);
        }
        return rows;
    }

    std::vector<std::size_t> rows_outside(std::size_t fold) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < fold_of.size(); ++i) {
            if (fold_of[i] != fold) rows.push_back(i);
        }
        return rows;
    }
};

// Uniformly random balanced partition of [0, n) into K folds.
inline FoldAssignment partition_folds(std::size_t n, std::size_t K, const RngStream& stream) {
    if (K < 2 || K > n) {
        throw ArgumentError("fold count K=" + std::to_string(K) + " must lie in [2, " + std::to_string(n) + "]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto engine = stream.engine();
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(engine.uniform_index(i + 1));
        std::swap(order[i], order[j]);
    }
    FoldAssignment folds{K, std::vector<std::size_t>(n)};
    for (std::size_t pos = 0; pos < n; ++pos) folds.fold_of[order[pos]] = pos % K;
    return folds;
}

// A fitted predictor.
class Model {
public:
    virtual ~Model() = default;
    virtual double predict(std::span<const double> x) const = 0;
};

// Fits a Model on the given rows of (features, outcomes). Implementations
// report failure by throwing; the caller attaches the fold number.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::shared_ptr<const Model> fit(const Matrix& features, std::span<const double> outcomes,
                                             std::span<const std::size_t> rows) const = 0;
};

struct LinearLearnerSpec {
    bool intercept = true;
};

struct LogisticLearnerSpec {
    bool intercept = true;
    // Predict 0/1 labels (p >= 0.5) instead of probabilities.
    bool output_labels = false;
};

struct KnnLearnerSpec {
    std::size_t k = 5;
};

using LearnerSpec = std::variant<LinearLearnerSpec, LogisticLearnerSpec, KnnLearnerSpec>;

namespace detail {

inline std::span<const double> row_span(const Matrix& m, std::size_t i) {
    return {m.data() + static_cast<std::ptrdiff_t>(i) * m.cols(), static_cast<std::size_t>(m.cols())};
}

class LinearModel final : public Model {
public:
    LinearModel(Eigen::VectorXd coef, bool intercept) : coef_(std::move(coef)), intercept_(intercept) {}

    double predict(std::span<const double> x) const override {
        double v = intercept_ ? coef_(coef_.size() - 1) : 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) v += coef_(static_cast<Eigen::Index>(j)) * x[j];
        return v;
    }

private:
    Eigen::VectorXd coef_;
    bool intercept_;
};

class LogisticModel final : public Model {
public:
    LogisticModel(Eigen::VectorXd coef, bool intercept, bool labels)
        : coef_(std::move(coef)), intercept_(intercept), labels_(labels) {}

    double predict(std::span<const double> x) const override {
        double eta = intercept_ ? coef_(coef_.size() - 1) : 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) eta += coef_(static_cast<Eigen::Index>(j)) * x[j];
        const double p = 1.0 / (1.0 + std::exp(-eta));
        if (labels_) return p >= 0.5 ? 1.0 : 0.0;
        return p;
    }

private:
    Eigen::VectorXd coef_;
    bool intercept_;
    bool labels_;
};

// Mean outcome of the k nearest training rows (Euclidean); ties go to the
// earlier training row.
class KnnModel final : public Model {
public:
    KnnModel(Matrix features, std::vector<double> outcomes, std::size_t k)
        : features_(std::move(features)), outcomes_(std::move(outcomes)), k_(k) {}

    double predict(std::span<const double> x) const override {
        const auto n = static_cast<std::size_t>(features_.rows());
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double diff = features_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - x[j];
                d2 += diff * diff;
            }
            dist[i] = {d2, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
        ExactSum acc;
        for (std::size_t r = 0; r < k_; ++r) acc.add(outcomes_[dist[r].second]);
        return acc.value() / static_cast<double>(k_);
    }

private:
    Matrix features_;
    std::vector<double> outcomes_;
    std::size_t k_;
};

class LinearLearner final : public Learner {
public:
    explicit LinearLearner(LinearLearnerSpec spec) : spec_(spec) {}
    std::shared_ptr<const Model> fit(const Matrix& features, std::span<const double> outcomes,
                                     std::span<const std::size_t> rows) const override {
        auto beta = fit_ols(SampleRef{features, outcomes, rows}, spec_.intercept);
        if (!beta) throw InferenceError("linear learner: singular design");
        return std::make_shared<LinearModel>(std::move(*beta), spec_.intercept);
    }

private:
    LinearLearnerSpec spec_;
};

class LogisticLearner final : public Learner {
public:
    explicit LogisticLearner(LogisticLearnerSpec spec) : spec_(spec) {}
    std::shared_ptr<const Model> fit(const Matrix& features, std::span<const double> outcomes,
                                     std::span<const std::size_t> rows) const override {
        LogisticFit f = fit_logistic(SampleRef{features, outcomes, rows}, spec_.intercept);
        if (f.status == EstimateStatus::degenerate) throw InferenceError(std::string("logistic learner: ") + f.reason);
        return std::make_shared<LogisticModel>(std::move(f.coefficients), spec_.intercept, spec_.output_labels);
    }

private:
    LogisticLearnerSpec spec_;
};

class KnnLearner final : public Learner {
public:
    explicit KnnLearner(KnnLearnerSpec spec) : spec_(spec) {}
    std::shared_ptr<const Model> fit(const Matrix& features, std::span<const double> outcomes,
                                     std::span<const std::size_t> rows) const override {
        if (rows.size() < spec_.k) {
            throw InferenceError("k-NN learner: k=" + std::to_string(spec_.k) + " exceeds the " +
                                 std::to_string(rows.size()) + " training rows");
        }
        return std::make_shared<KnnModel>(gather_rows(features, rows), gather(outcomes, rows), spec_.k);
    }

private:
    KnnLearnerSpec spec_;
};

} // namespace detail

inline std::unique_ptr<Learner> make_learner(const LearnerSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::unique_ptr<Learner> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LinearLearnerSpec>) {
                return std::make_unique<detail::LinearLearner>(s);
            } else if constexpr (std::is_same_v<S, LogisticLearnerSpec>) {
                return std::make_unique<detail::LogisticLearner>(s);
            } else {
                if (s.k < 1) throw ArgumentError("k-NN learner needs k >= 1");
                return std::make_unique<detail::KnnLearner>(s);
            }
        },
        spec);
}

// models[j] was trained on every labeled row outside fold j.
struct FoldModels {
    std::vector<std::shared_ptr<const Model>> models;
};

inline FoldModels train_fold_models(const Matrix& features, std::span<const double> outcomes,
                                    const FoldAssignment& folds, const Learner& learner, unsigned threads = 1) {
    if (static_cast<std::size_t>(features.rows()) != outcomes.size() || folds.size() != outcomes.size()) {
        throw ArgumentError("train_fold_models: features, outcomes and folds disagree on the row count");
    }
    FoldModels out;
    out.models.resize(folds.K);
    parallel_for(folds.K, threads, [&](std::size_t j) {
        const auto rows = folds.rows_outside(j);
        if (rows.empty()) throw TrainingError("fold " + std::to_string(j) + " leaves no training rows", j);
        try {
            out.models[j] = learner.fit(features, outcomes, rows);
        } catch (const TrainingError&) {
            throw;
        } catch (const Error& e) {
            throw TrainingError("training failed on fold " + std::to_string(j) + ": " + e.what(), j);
        }
    });
    return out;
}

struct CrossPredictions {
    std::vector<double> labeled;
    std::vector<double> unlabeled;
};

// Labeled row i is predicted by models[fold_of[i]]; unlabeled rows get the
// mean prediction over all K models.
inline CrossPredictions assemble_cross_predictions(const Matrix& labeled_features, const Matrix& unlabeled_features,
                                                   const FoldAssignment& folds, const FoldModels& models) {
    if (models.models.size() != folds.K) throw ArgumentError("one model per fold is required");
    if (static_cast<std::size_t>(labeled_features.rows()) != folds.size()) {
        throw ArgumentError("fold assignment does not match the labeled rows");
    }
    CrossPredictions out;
    out.labeled.resize(folds.size());
    for (std::size_t i = 0; i < folds.size(); ++i) {
        out.labeled[i] = models.models[folds.fold_of[i]]->predict(detail::row_span(labeled_features, i));
    }
    const auto n_unlabeled = static_cast<std::size_t>(unlabeled_features.rows());
    out.unlabeled.resize(n_unlabeled);
    for (std::size_t i = 0; i < n_unlabeled; ++i) {
        ExactSum acc;
        for (const auto& m : models.models) acc.add(m->predict(detail::row_span(unlabeled_features, i)));
        out.unlabeled[i] = acc.value() / static_cast<double>(folds.K);
    }
    return out;
}

struct CrossFitData {
    LabeledDataset labeled;
    UnlabeledDataset unlabeled;
    FoldAssignment folds;
};

// Partition (folds phase of `stream`), train and attach cross-fitted
// prediction columns.
inline CrossFitData cross_fit(const Matrix& labeled_features, std::span<const double> outcomes,
                              const Matrix& unlabeled_features, std::size_t K, const Learner& learner,
                              const RngStream& stream, unsigned threads = 1) {
    if (labeled_features.cols() != unlabeled_features.cols()) {
        throw ValidationError("labeled and unlabeled feature counts differ");
    }
    FoldAssignment folds = partition_folds(outcomes.size(), K, stream.child(Phase::folds));
    const FoldModels models = train_fold_models(labeled_features, outcomes, folds, learner, threads);
    CrossPredictions preds = assemble_cross_predictions(labeled_features, unlabeled_features, folds, models);
    LabeledDataset labeled(labeled_features, std::vector<double>(outcomes.begin(), outcomes.end()),
                           std::move(preds.labeled));
    UnlabeledDataset unlabeled(unlabeled_features, std::move(preds.unlabeled));
    return {std::move(labeled), std::move(unlabeled), std::move(folds)};
}

inline ConfidenceInterval cross_ppboot_interval(const Matrix& labeled_features, std::span<const double> outcomes,
                                                const Matrix& unlabeled_features, const EstimandSpec& spec,
                                                const BootstrapConfig& cfg, std::size_t K, const Learner& learner,
                                                const RngStream& stream) {
    const CrossFitData data = cross_fit(labeled_features, outcomes, unlabeled_features, K, learner, stream, cfg.threads);
    return ppboot_interval(data.labeled, data.unlabeled, spec, cfg, stream);
}

// Data-splitting baseline: a random `train_fraction` of the labeled rows
// trains a single model, the rest (with that model's predictions) and the
// unlabeled data go to the prediction-powered bootstrap.
inline ConfidenceInterval split_ppboot_interval(const Matrix& labeled_features, std::span<const double> outcomes,
                                                const Matrix& unlabeled_features, const EstimandSpec& spec,
                                                const BootstrapConfig& cfg, const Learner& learner,
                                                double train_fraction, const RngStream& stream) {
    const std::size_t n = outcomes.size();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ArgumentError("train fraction must lie strictly inside (0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train < 1 || n < n_train + 2) {
        throw ArgumentError("data split leaves too few rows for training or inference");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto engine = stream.child(Phase::folds).child(1).engine();
    for (std::size_t i = 0; i < n_train; ++i) {
        const auto j = i + static_cast<std::size_t>(engine.uniform_index(n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> infer(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(infer.begin(), infer.end());

    std::shared_ptr<const Model> model;
    try {
        model = learner.fit(labeled_features, outcomes, train);
    } catch (const Error& e) {
        throw TrainingError(std::string("training failed on the split-off data: ") + e.what(), 0);
    }
    Matrix infer_x = detail::gather_rows(labeled_features, infer);
    std::vector<double> infer_y = detail::gather(outcomes, infer);
    std::vector<double> infer_pred(infer.size());
    for (std::size_t i = 0; i < infer.size(); ++i) infer_pred[i] = model->predict(detail::row_span(infer_x, i));
    std::vector<double> unlabeled_pred(static_cast<std::size_t>(unlabeled_features.rows()));
    for (std::size_t i = 0; i < unlabeled_pred.size(); ++i) {
        unlabeled_pred[i] = model->predict(detail::row_span(unlabeled_features, i));
    }
    LabeledDataset labeled(std::move(infer_x), std::move(infer_y), std::move(infer_pred));
    UnlabeledDataset unlabeled(unlabeled_features, std::move(unlabeled_pred));
    return ppboot_interval(labeled, unlabeled, spec, cfg, stream);
}

} // namespace ppboot
