// digits.hpp
// Digit sums and digit-sum parities in arbitrary bases.
//
// digit_sum / digit_parity are the reference definitions (repeated division).
// ParityTable is the fast path used by the experiment kernels: it stores the
// parity of every value below chunk = base^k (the largest such power <= 2^17)
// so a 64-bit input costs one lookup per base^k "super digit". Digit sums are
// additive across super digits, so parities combine with XOR.

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sodp {

class Base {
public:
    explicit constexpr Base(std::uint64_t radix) : value_(radix) {
        if (radix < 2) throw std::invalid_argument("base must be >= 2, got " + std::to_string(radix));
    }

    constexpr std::uint64_t value() const noexcept { return value_; }
    constexpr bool is_odd() const noexcept { return (value_ & 1U) != 0; }

    constexpr auto operator<=>(const Base&) const = default;

private:
    std::uint64_t value_;
};

inline constexpr Base kDecimal{10};

enum class Parity : std::uint8_t { Even, Odd };

constexpr std::uint64_t digit_sum(std::uint64_t n, Base base) noexcept {
    const std::uint64_t b = base.value();
    std::uint64_t sum = 0;
    while (n != 0) {
        sum += n % b;
        n /= b;
    }
    return sum;
}

constexpr Parity digit_parity(std::uint64_t n, Base base) noexcept {
    return (digit_sum(n, base) & 1U) != 0 ? Parity::Odd : Parity::Even;
}

constexpr const char* to_string(Parity p) noexcept { return p == Parity::Even ? "Even" : "Odd"; }

class ParityTable {
public:
    static constexpr std::uint64_t kMaxChunk = std::uint64_t{1} << 17;

    explicit ParityTable(Base base);

    Base base() const noexcept { return base_; }
    /// Zero when the radix is too large to tabulate.
    std::uint64_t chunk() const noexcept { return chunk_; }

    /// Parity bit of a value below chunk().
    bool chunk_is_odd(std::uint64_t value) const noexcept {
        return ((bits_[value >> 6] >> (value & 63U)) & 1U) != 0;
    }

    /// Generic path; divides by a runtime chunk. Prefer with_parity_kernel in loops.
    /// Radixes above kMaxChunk have no table and use the reference loop.
    bool is_odd(std::uint64_t n) const noexcept {
        if (chunk_ == 0) return digit_parity(n, base_) == Parity::Odd;
        bool odd = false;
        while (n >= chunk_) {
            odd ^= chunk_is_odd(n % chunk_);
            n /= chunk_;
        }
        return odd ^ chunk_is_odd(n);
    }

    Parity parity(std::uint64_t n) const noexcept { return is_odd(n) ? Parity::Odd : Parity::Even; }

    const std::uint64_t* data() const noexcept { return bits_.data(); }

private:
    Base base_;
    std::uint64_t chunk_;
    std::vector<std::uint64_t> bits_;
};

/// Process-wide table for `base`, built on first use. Thread safe.
const ParityTable& parity_table(Base base);

constexpr std::uint64_t chunk_for_radix(std::uint64_t radix) noexcept {
    std::uint64_t chunk = radix;
    while (chunk <= ParityTable::kMaxChunk / radix) chunk *= radix;
    return chunk;
}

/// Parity kernel with a compile-time chunk so the divisions become multiplies.
template <std::uint64_t Radix>
class FixedRadixParity {
public:
    static constexpr std::uint64_t kChunk = chunk_for_radix(Radix);

    explicit FixedRadixParity(const ParityTable& table) : bits_(table.data()) {}

    bool is_odd(std::uint64_t n) const noexcept {
        // 32-bit division by a constant is cheaper; most inputs fit.
        if (n <= 0xffffffffULL) return is_odd_narrow(static_cast<std::uint32_t>(n));
        bool odd = false;
        while (n >= kChunk) {
            odd ^= bit(n % kChunk);
            n /= kChunk;
        }
        return odd ^ bit(n);
    }

    bool is_even(std::uint64_t n) const noexcept { return !is_odd(n); }

private:
    bool bit(std::uint64_t v) const noexcept { return ((bits_[v >> 6] >> (v & 63U)) & 1U) != 0; }

    bool is_odd_narrow(std::uint32_t n) const noexcept {
        constexpr auto chunk = static_cast<std::uint32_t>(kChunk);
        bool odd = false;
        while (n >= chunk) {
            odd ^= bit(n % chunk);
            n /= chunk;
        }
        return odd ^ bit(n);
    }

    const std::uint64_t* bits_;
};

class DynamicParity {
public:
    explicit DynamicParity(const ParityTable& table) : table_(&table) {}
    bool is_odd(std::uint64_t n) const noexcept { return table_->is_odd(n); }
    bool is_even(std::uint64_t n) const noexcept { return !table_->is_odd(n); }

private:
    const ParityTable* table_;
};

/// Calls `f(kernel)` with the fastest parity kernel available for `base`.
/// Kernels expose is_odd(n) / is_even(n) and agree bit for bit with digit_parity.
template <typename F>
decltype(auto) with_parity_kernel(Base base, F&& f) {
    const ParityTable& table = parity_table(base);
    switch (base.value()) {
        case 2: return f(FixedRadixParity<2>{table});
        case 4: return f(FixedRadixParity<4>{table});
        case 6: return f(FixedRadixParity<6>{table});
        case 8: return f(FixedRadixParity<8>{table});
        case 10: return f(FixedRadixParity<10>{table});
        case 16: return f(FixedRadixParity<16>{table});
        default: return f(DynamicParity{table});
    }
}

}  // namespace sodp
