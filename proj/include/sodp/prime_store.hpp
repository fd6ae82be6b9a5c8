// prime_store.hpp
// The first N primes, sieved once and served by index.
//
// Cache file layout (all integers little-endian):
//
//   offset  size      field
//   0       4         magic "SODP"
//   4       4         format version (u32, currently 1)
//   8       8         count (u64)
//   16      8*count   primes (u64 each, increasing)
//   16+8c   8         checksum: sum of all primes mod 2^64

#pragma once

#include "sodp/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sodp {

class PrimeStore {
public:
    /// Takes ownership of an already validated prime list. Use build_primes or
    /// load_cache; this constructor only checks the cheap invariants.
    explicit PrimeStore(std::vector<std::uint64_t> primes);

    std::uint64_t count() const noexcept { return primes_.size(); }
    std::uint64_t max_prime() const noexcept { return primes_.back(); }
    std::span<const std::uint64_t> primes() const noexcept { return primes_; }
    std::uint64_t operator[](std::size_t i) const noexcept { return primes_[i]; }

    auto begin() const noexcept { return primes_.begin(); }
    auto end() const noexcept { return primes_.end(); }

    bool operator==(const PrimeStore&) const = default;

private:
    std::vector<std::uint64_t> primes_;
};

/// Upper bound on the n-th prime: n(ln n + ln ln n) for n >= 6, else 13.
std::uint64_t nth_prime_upper_bound(std::uint64_t n);

/// Deterministic segmented sieve of Eratosthenes over odd numbers.
/// Throws std::invalid_argument for count == 0 and std::length_error
/// (wrapping std::bad_alloc) when the request does not fit in memory.
PrimeStore build_primes(std::uint64_t count);

class CacheError : public std::runtime_error {
public:
    enum class Kind { Io, BadHeader, Truncated, ChecksumMismatch, TrailingData };

    CacheError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

const char* to_string(CacheError::Kind kind) noexcept;

inline constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t cache_checksum(std::span<const std::uint64_t> primes) noexcept;

void save_cache(const PrimeStore& store, const std::filesystem::path& path);
PrimeStore load_cache(const std::filesystem::path& path);

/// s independent uniform draws, with replacement.
std::vector<std::uint64_t> sample_primes(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng);

}  // namespace sodp
