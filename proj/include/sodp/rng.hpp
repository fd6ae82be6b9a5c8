// rng.hpp
// Pinned pseudorandom streams for every seeded experiment.
//
//   seed expansion : SplitMix64 (Steele, Lea, Flood 2014), gamma 0x9e3779b97f4a7c15
//   stream         : xoshiro256** (Blackman, Vigna 2018)
//   bounded draws  : Lemire multiply-shift with rejection, so no modulo bias
//
// Every constant below is part of the reproducibility contract: changing any
// of them changes every seeded output of the workbench.

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace sodp {

inline constexpr std::uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ULL;

/// One SplitMix64 step from state `x`: advance by the golden gamma, then mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    std::uint64_t z = x + kSplitMixGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for a labelled sub-stream (sweep point, run index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept {
    return splitmix64(parent ^ splitmix64(label));
}

/// Seed of trial `index` under `seed`. Trials are order independent.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ index);
}

class Xoshiro256ss {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256ss(std::uint64_t seed) noexcept {
        // Expand through consecutive SplitMix64 outputs. The state can never
        // be all zero because splitmix64 is a bijection over distinct inputs.
        std::uint64_t x = seed;
        for (auto& word : state_) {
            word = splitmix64(x);
            x += kSplitMixGamma;
        }
    }

    /// Resumes a stream from a raw state. The state must not be all zero.
    static constexpr Xoshiro256ss from_state(const std::array<std::uint64_t, 4>& state) noexcept {
        Xoshiro256ss rng(0);
        rng.state_ = state;
        return rng;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). `bound` must be nonzero.
    constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
    constexpr std::uint64_t uniform_between(std::uint64_t lo, std::uint64_t hi) noexcept {
        const std::uint64_t span = hi - lo;
        if (span == std::numeric_limits<std::uint64_t>::max()) return (*this)();
        return lo + uniform_below(span + 1);
    }

    constexpr const std::array<std::uint64_t, 4>& state() const noexcept { return state_; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Fisher-Yates from the back, j uniform in [0, i]. Portable, unlike std::shuffle.
template <typename T>
void shuffle(std::span<T> values, Xoshiro256ss& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_below(i));
        using std::swap;
        swap(values[i - 1], values[j]);
    }
}

}  // namespace sodp
