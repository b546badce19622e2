#pragma once

// Counter-based random streams.
//
// A stream is identified by a master seed plus a path of integers such as
// {trial, phase, iteration}. The path is hashed into the upper half of a
// Philox4x32-10 counter and the seed becomes the key, so the numbers drawn
// for any path are a pure function of (seed, path). Nothing is shared between
// streams, which is what lets bootstrap iterations run in any order on any
// number of threads and still reproduce bit for bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <vector>

#include "error.hpp"

namespace ppboot {

// Path component tags separating the independent uses of randomness.
enum class Phase : std::uint64_t {
    split = 0,
    tuning = 1,
    main = 2,
    synthetic = 3,
    folds = 4,
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// Philox4x32 with 10 rounds (Salmon et al., Random123).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }
};

// Sequential generator over one stream's counter space.
class RngEngine {
public:
    using result_type = std::uint32_t;

    RngEngine(std::uint64_t seed, std::uint64_t path_hash) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_hash)),
          path_hi_(static_cast<std::uint32_t>(path_hash >> 32)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next_u32(); }

    std::uint32_t next_u32() noexcept {
        if (used_ == 4) refill();
        return buffer_[used_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform integer in [0, bound), exact (Lemire's multiply-and-reject).
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound == 0) throw ArgumentError("uniform_index: bound must be positive");
        if (bound <= 0xFFFFFFFFull) {
            const auto b = static_cast<std::uint32_t>(bound);
            std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * b;
            auto low = static_cast<std::uint32_t>(m);
            if (low < b) {
                const std::uint32_t threshold = static_cast<std::uint32_t>(-b) % b;
                while (low < threshold) {
                    m = static_cast<std::uint64_t>(next_u32()) * b;
                    low = static_cast<std::uint32_t>(m);
                }
            }
            return m >> 32;
        }
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    // Uniform double in the open interval (0, 1).
    double uniform_open01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; values are produced in pairs.
    double normal() noexcept {
        if (has_spare_normal_) {
            has_spare_normal_ = false;
            return spare_normal_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform_open01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_normal_ = radius * std::sin(angle);
        has_spare_normal_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double p) noexcept { return uniform_open01() < p; }

private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), path_lo_, path_hi_};
        buffer_ = Philox4x32::generate(ctr, key_);
        ++block_;
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    unsigned used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

// Identifies an independent random stream: (master seed, path).
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed) : master_seed_(master_seed) {}
    RngStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path)
        : master_seed_(master_seed), path_(path) {}
    RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path)
        : master_seed_(master_seed), path_(std::move(path)) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    const std::vector<std::uint64_t>& path() const noexcept { return path_; }

    RngStream child(std::uint64_t component) const {
        RngStream out = *this;
        out.path_.push_back(component);
        return out;
    }
    RngStream child(Phase phase) const { return child(static_cast<std::uint64_t>(phase)); }

    std::uint64_t path_hash() const noexcept {
        std::uint64_t h = detail::mix64(0x243F6A8885A308D3ull ^ path_.size());
        for (std::uint64_t c : path_) {
            h = detail::mix64(h ^ detail::mix64(c + 0x9E3779B97F4A7C15ull)) + 0x9E3779B97F4A7C15ull;
        }
        return h;
    }

    RngEngine engine() const noexcept { return RngEngine(master_seed_, path_hash()); }

    friend bool operator==(const RngStream&, const RngStream&) = default;

private:
    std::uint64_t master_seed_;
    std::vector<std::uint64_t> path_;
};

} // namespace ppboot
