#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"
#include "rng.hpp"

namespace ppboot {

// Dense feature matrix, one observation per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValidationError(std::string(what) + " has a non-finite entry at row " +
                                  std::to_string(i + 1));
        }
    }
}

inline void require_finite(const Matrix& m, const char* what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j))) {
                throw ValidationError(std::string(what) + " has a non-finite entry at row " +
                                      std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            }
        }
    }
}

inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

inline std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(v[r]);
    return out;
}

} // namespace detail

// Labeled observations (X, Y) together with model predictions f(X).
// Immutable once constructed.
class LabeledDataset {
public:
    LabeledDataset(Matrix features, std::vector<double> outcomes, std::vector<double> predictions)
        : features_(std::move(features)), outcomes_(std::move(outcomes)),
          predictions_(std::move(predictions)) {
        const auto n = static_cast<std::size_t>(features_.rows());
        if (outcomes_.size() != n || predictions_.size() != n) {
            throw ValidationError("labeled dataset: features, outcomes and predictions have " +
                                  std::to_string(n) + ", " + std::to_string(outcomes_.size()) +
                                  " and " + std::to_string(predictions_.size()) + " rows");
        }
        if (n < 2) throw ValidationError("labeled dataset needs at least 2 rows");
        detail::require_finite(features_, "labeled features");
        detail::require_finite(outcomes_, "labeled outcomes");
        detail::require_finite(predictions_, "labeled predictions");
    }

    std::size_t size() const noexcept { return outcomes_.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    const Matrix& features() const noexcept { return features_; }
    std::span<const double> outcomes() const noexcept { return outcomes_; }
    std::span<const double> predictions() const noexcept { return predictions_; }

    LabeledDataset with_predictions(std::vector<double> predictions) const {
        return LabeledDataset(features_, outcomes_, std::move(predictions));
    }

    LabeledDataset subset(std::span<const std::size_t> rows) const {
        return LabeledDataset(detail::gather_rows(features_, rows), detail::gather(outcomes_, rows),
                              detail::gather(predictions_, rows));
    }

private:
    Matrix features_;
    std::vector<double> outcomes_;
    std::vector<double> predictions_;
};

// Unlabeled observations X~ together with predictions f(X~).
class UnlabeledDataset {
public:
    UnlabeledDataset(Matrix features, std::vector<double> predictions)
        : features_(std::move(features)), predictions_(std::move(predictions)) {
        const auto n = static_cast<std::size_t>(features_.rows());
        if (predictions_.size() != n) {
            throw ValidationError("unlabeled dataset: features and predictions have " +
                                  std::to_string(n) + " and " +
                                  std::to_string(predictions_.size()) + " rows");
        }
        if (n < 2) throw ValidationError("unlabeled dataset needs at least 2 rows");
        detail::require_finite(features_, "unlabeled features");
        detail::require_finite(predictions_, "unlabeled predictions");
    }

    std::size_t size() const noexcept { return predictions_.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    const Matrix& features() const noexcept { return features_; }
    std::span<const double> predictions() const noexcept { return predictions_; }

    UnlabeledDataset with_predictions(std::vector<double> predictions) const {
        return UnlabeledDataset(features_, std::move(predictions));
    }

private:
    Matrix features_;
    std::vector<double> predictions_;
};

inline void require_matching_dims(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled) {
    if (labeled.dims() != unlabeled.dims()) {
        throw ValidationError("labeled data has " + std::to_string(labeled.dims()) +
                              " feature columns but unlabeled data has " +
                              std::to_string(unlabeled.dims()));
    }
}

struct TrialSplit {
    LabeledDataset labeled;
    UnlabeledDataset unlabeled;
    // Source rows of each side, ascending.
    std::vector<std::size_t> labeled_rows;
    std::vector<std::size_t> unlabeled_rows;
};

// Chooses a uniformly random size-n subset of `full` as labeled data and
// drops the outcomes of the remaining rows. Both sides keep source order.
inline TrialSplit split_trial(const LabeledDataset& full, std::size_t n, const RngStream& stream) {
    const std::size_t total = full.size();
    if (n < 2 || total < 4 || n > total - 2) {
        throw ArgumentError("split_trial: labeled size " + std::to_string(n) +
                            " must lie in [2, " + std::to_string(total >= 2 ? total - 2 : 0) +
                            "] for " + std::to_string(total) + " rows");
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto engine = stream.engine();
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(engine.uniform_index(total - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> labeled_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::size_t> unlabeled_rows(order.begin() + static_cast<std::ptrdiff_t>(n), order.end());
    std::sort(labeled_rows.begin(), labeled_rows.end());
    std::sort(unlabeled_rows.begin(), unlabeled_rows.end());

    LabeledDataset labeled = full.subset(labeled_rows);
    UnlabeledDataset unlabeled(detail::gather_rows(full.features(), unlabeled_rows),
                               detail::gather(full.predictions(), unlabeled_rows));
    return TrialSplit{std::move(labeled), std::move(unlabeled), std::move(labeled_rows),
                      std::move(unlabeled_rows)};
}

} // namespace ppboot
