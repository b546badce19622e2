#pragma once

// Order-independent floating-point summation.
//
// Every finite double is an integer multiple of 2^-1074, so a sum of doubles
// can be held exactly in a handful of wide integer bins. Integer addition is
// associative, which makes the accumulated state (and therefore the rounded
// result) independent of the order in which terms arrive. Estimators use this
// for every reduction so that permuting rows, resampling in parallel, or
// splitting work across threads never changes a single bit of the output.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace ppboot {

namespace detail {

// Correctly rounded sum of a short list of doubles (Shewchuk / msum with
// half-even fixup). Input terms must be finite.
inline double correctly_rounded_sum(std::span<const double> terms) {
    std::vector<double> partials;
    partials.reserve(8);
    for (double x : terms) {
        std::size_t i = 0;
        for (double y : partials) {
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        partials.resize(i);
        partials.push_back(x);
    }

    std::size_t n = partials.size();
    if (n == 0) return 0.0;
    double hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr) hi = x;
    }
    return hi;
}

} // namespace detail

class ExactSum {
public:
    void add(double x) noexcept {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        const auto biased_exp = static_cast<unsigned>((bits >> 52) & 0x7FFu);
        std::uint64_t mant = bits & ((std::uint64_t{1} << 52) - 1);
        if (biased_exp == 0x7FFu) {
            special_ += x;
            has_special_ = true;
            return;
        }
        if (biased_exp == 0 && mant == 0) return;

        unsigned pos = 0;
        if (biased_exp != 0) {
            mant |= std::uint64_t{1} << 52;
            pos = biased_exp - 1;
        }
        const unsigned bin = pos >> 5;
        const __int128 term = static_cast<__int128>(mant) << (pos & 31u);
        if (bits >> 63) {
            bins_[bin] -= term;
        } else {
            bins_[bin] += term;
        }
        if (bin < lo_bin_) lo_bin_ = bin;
        if (bin + 1 > hi_bin_) hi_bin_ = bin + 1;
    }

    void add_product(double a, double b) noexcept { add(a * b); }

    ExactSum& operator+=(const ExactSum& other) noexcept {
        for (unsigned k = other.lo_bin_; k < other.hi_bin_; ++k) bins_[k] += other.bins_[k];
        if (other.lo_bin_ < lo_bin_) lo_bin_ = other.lo_bin_;
        if (other.hi_bin_ > hi_bin_) hi_bin_ = other.hi_bin_;
        if (other.has_special_) {
            special_ += other.special_;
            has_special_ = true;
        }
        return *this;
    }

    // The exact sum rounded to the nearest double.
    double value() const {
        if (has_special_) return special_;
        std::vector<double> pieces;
        pieces.reserve(3 * (hi_bin_ > lo_bin_ ? hi_bin_ - lo_bin_ : 0));
        constexpr int chunk_bits = 42;
        constexpr __int128 chunk_mask = (static_cast<__int128>(1) << chunk_bits) - 1;
        for (unsigned k = lo_bin_; k < hi_bin_; ++k) {
            const __int128 v = bins_[k];
            if (v == 0) continue;
            const int base = static_cast<int>(32 * k) - 1074;
            const auto c0 = static_cast<std::int64_t>(v & chunk_mask);
            const auto c1 = static_cast<std::int64_t>((v >> chunk_bits) & chunk_mask);
            const auto c2 = static_cast<std::int64_t>(v >> (2 * chunk_bits));
            if (c2 != 0) pieces.push_back(std::ldexp(static_cast<double>(c2), base + 2 * chunk_bits));
            if (c1 != 0) pieces.push_back(std::ldexp(static_cast<double>(c1), base + chunk_bits));
            if (c0 != 0) pieces.push_back(std::ldexp(static_cast<double>(c0), base));
        }
        return detail::correctly_rounded_sum(pieces);
    }

private:
    std::array<__int128, 64> bins_{};
    unsigned lo_bin_ = 64;
    unsigned hi_bin_ = 0;
    double special_ = 0.0;
    bool has_special_ = false;
};

inline double exact_sum(std::span<const double> values) {
    ExactSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

} // namespace ppboot
