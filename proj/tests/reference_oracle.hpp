#pragma once

// Deliberately naive reimplementations used as test oracles. They share only
// the random index draws with the library; resamples are materialized as
// copies, sums are plain loops and quantiles come from a full sort.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <ppboot/dataset.hpp>
#include <ppboot/resampling.hpp>
#include <ppboot/rng.hpp>

namespace ppboot::oracle {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double nearest_rank(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    auto k = static_cast<long>(std::ceil(q * static_cast<double>(v.size()) - 1e-9));
    k = std::clamp(k, 1L, static_cast<long>(v.size()));
    return v[static_cast<std::size_t>(k - 1)];
}

inline std::vector<double> pick(std::span<const double> v, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

struct Interval {
    double lower;
    double upper;
    std::vector<double> draws;
};

// Prediction-powered percentile bootstrap of a scalar statistic of the
// response alone (mean, quantile). No degenerate handling: every attempt-0
// resample is used.
template <class Stat>
Interval ppboot(std::span<const double> y, std::span<const double> f, std::span<const double> f_unlabeled,
                double lambda, std::size_t B, double alpha, const RngStream& stream, Stat stat) {
    Interval out{};
    for (std::size_t b = 0; b < B; ++b) {
        const RngStream s = stream.child(Phase::main).child(b).child(0);
        const ResampleIndices r = draw_resample(y.size(), f_unlabeled.size(), s);
        const double u = stat(pick(f_unlabeled, r.unlabeled_idx));
        const double ys = stat(pick(y, r.labeled_idx));
        const double fs = stat(pick(f, r.labeled_idx));
        out.draws.push_back(lambda * u + ys - lambda * fs);
    }
    out.lower = nearest_rank(out.draws, alpha / 2.0);
    out.upper = nearest_rank(out.draws, 1.0 - alpha / 2.0);
    return out;
}

template <class Stat>
Interval classical(std::span<const double> y, std::size_t B, double alpha, const RngStream& stream, Stat stat) {
    Interval out{};
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<std::size_t> idx;
        draw_labeled(y.size(), stream.child(Phase::main).child(b).child(0), idx);
        out.draws.push_back(stat(pick(y, idx)));
    }
    out.lower = nearest_rank(out.draws, alpha / 2.0);
    out.upper = nearest_rank(out.draws, 1.0 - alpha / 2.0);
    return out;
}

// Brute-force 1-nearest-neighbour outcome (ties to the lowest index).
inline double nearest_neighbour(const Matrix& x, std::span<const double> y, const std::vector<std::size_t>& train,
                                std::span<const double> query) {
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (std::size_t r : train) {
        double d = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
            const double diff = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - query[j];
            d += diff * diff;
        }
        if (d < best) {
            best = d;
            value = y[r];
        }
    }
    return value;
}

} // namespace ppboot::oracle
