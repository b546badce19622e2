#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "rng.hpp"

namespace ppboot {

// One with-replacement resample of the labeled and unlabeled rows.
struct ResampleIndices {
    std::vector<std::size_t> labeled_idx;
    std::vector<std::size_t> unlabeled_idx;
};

// n i.i.d. uniform draws from [0, n). Stream child 0 is reserved for the
// labeled side so that a labeled-only resample (classical bootstrap) sees
// exactly the same rows as the labeled half of a joint resample.
inline void draw_labeled(std::size_t n, const RngStream& stream, std::vector<std::size_t>& out) {
    if (n < 1) throw ArgumentError("draw_resample: labeled size must be positive");
    auto engine = stream.child(0).engine();
    out.resize(n);
    for (auto& idx : out) idx = static_cast<std::size_t>(engine.uniform_index(n));
}

inline void draw_unlabeled(std::size_t n_unlabeled, const RngStream& stream, std::vector<std::size_t>& out) {
    if (n_unlabeled < 1) throw ArgumentError("draw_resample: unlabeled size must be positive");
    auto engine = stream.child(1).engine();
    out.resize(n_unlabeled);
    for (auto& idx : out) idx = static_cast<std::size_t>(engine.uniform_index(n_unlabeled));
}

inline ResampleIndices draw_resample(std::size_t n, std::size_t n_unlabeled, const RngStream& stream) {
    ResampleIndices r;
    draw_labeled(n, stream, r.labeled_idx);
    draw_unlabeled(n_unlabeled, stream, r.unlabeled_idx);
    return r;
}

// Nearest-rank upper quantile: the ceil(q * len)-th smallest value.
inline double empirical_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw ArgumentError("empirical_quantile of an empty vector");
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("quantile level must lie strictly inside (0, 1)");
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t k = detail::nearest_rank_index(q, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
}

} // namespace ppboot
