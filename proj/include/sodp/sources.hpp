// sources.hpp
// Seeded number generators for every population the experiments compare.
//
// All draws are with replacement and consume the generator in a fixed,
// documented order, so (spec, s, seed) always reproduces the same sequence.

#pragma once

#include "sodp/digits.hpp"
#include "sodp/prime_store.hpp"
#include "sodp/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sodp {

enum class SourceKind {
    Primes,
    RandomOdd,
    RandomAll,
    PrimeProducts,
    BiasedRandomProducts,
    Mixed,
    ChebyshevBalanced,
};

const char* to_string(SourceKind kind) noexcept;
std::optional<SourceKind> parse_source_kind(std::string_view name);

class SourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultPrimeCount = 50'000'000;

struct SourceSpec {
    SourceKind kind = SourceKind::Primes;
    std::optional<std::uint64_t> prime_count;      ///< first N primes; whole store when unset
    std::optional<std::uint64_t> range_max;        ///< m; defaults to the N-th prime
    double bias_rate = 0.5;                        ///< r, BiasedRandomProducts only
    double prime_fraction = 0.0;                   ///< x, Mixed only
    std::uint64_t seed = 0;
    Base base = kDecimal;                          ///< parity base for biased pools

    /// Throws SourceError if a field is out of range for its kind.
    void validate() const;

    /// Population size once bound to `store`; throws if the store is too small.
    std::uint64_t population(const PrimeStore& store) const;

    /// m once bound to `store`.
    std::uint64_t resolved_range_max(const PrimeStore& store) const;
};

/// floor(v), except values within 1e-9 of an integer snap to it, so that
/// (1 - 0.9) * 300000 counts as 30000 rather than 29999.
std::uint64_t floor_count(long double v);

// -- Per-kind generators ------------------------------------------------------

/// Uniform odd integers in [3, m]; requires m >= 3.
std::vector<std::uint64_t> draw_random_odd(std::uint64_t m, std::size_t s, Xoshiro256ss& rng);

/// Uniform integers in [lo, hi].
std::vector<std::uint64_t> draw_uniform(std::uint64_t lo, std::uint64_t hi, std::size_t s, Xoshiro256ss& rng);

/// p*q with p, q independent uniform draws from the first `population` primes.
std::vector<std::uint64_t> draw_prime_products(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng,
                                               std::optional<std::uint64_t> population = std::nullopt);

/// Parity-biased pool of s odd numbers from [3, m]: 3s raw draws are split by
/// digit-sum parity, then the first floor(r*s) even ones and the first
/// s - floor(r*s) odd ones are kept, evens first. A raw batch without enough
/// of either parity is discarded and redrawn, at most `max_attempts` times.
std::vector<std::uint64_t> build_biased_pool(double r, std::size_t s, std::uint64_t m, Base base,
                                             Xoshiro256ss& rng, int max_attempts = 32);

/// s products of two independent uniform draws from a biased pool.
std::vector<std::uint64_t> draw_biased_random_products(double r, std::size_t s, std::uint64_t m,
                                                       Xoshiro256ss& rng, Base base = kDecimal);

/// floor((1-x)s) uniform draws from [2, m] followed by the rest from the
/// first `population` primes. The prime block is the trailing block.
std::vector<std::uint64_t> draw_mixed(const PrimeStore& store, std::size_t s, double x, std::uint64_t m,
                                      Xoshiro256ss& rng, std::optional<std::uint64_t> population = std::nullopt);

/// Store indices of the primes in each odd residue class mod 4.
struct ResidueClasses {
    std::vector<std::uint32_t> one_mod4;
    std::vector<std::uint32_t> three_mod4;

    static ResidueClasses of(const PrimeStore& store, std::optional<std::uint64_t> population = std::nullopt);
};

/// s/2 draws from primes = 1 (mod 4), then s/2 from primes = 3 (mod 4), then
/// a Fisher-Yates shuffle. s must be even.
std::vector<std::uint64_t> draw_chebyshev_balanced(const PrimeStore& store, const ResidueClasses& classes,
                                                   std::size_t s, Xoshiro256ss& rng);
std::vector<std::uint64_t> draw_chebyshev_balanced(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng);

struct ModPairsPlan {
    std::vector<std::uint64_t> primes;    ///< distinct picks from the first pool_size primes
    std::vector<std::uint64_t> divisors;  ///< uniform in [2, m]

    std::size_t size() const noexcept { return primes.size() * divisors.size(); }

    /// Residues in prime-major order: p0 mod r0, p0 mod r1, ...
    template <typename F>
    void for_each_residue(F&& f) const {
        for (const std::uint64_t p : primes) {
            for (const std::uint64_t r : divisors) f(p % r);
        }
    }
};

/// Chooses `prime_subset` distinct primes from the first `prime_pool_size`
/// (partial Fisher-Yates), then `random_count` divisors from [2, m].
ModPairsPlan plan_mod_pairs(const PrimeStore& store, std::size_t prime_pool_size, std::size_t prime_subset,
                            std::size_t random_count, std::uint64_t m, Xoshiro256ss& rng);

std::vector<std::uint64_t> draw_mod_pairs(const PrimeStore& store, std::size_t prime_pool_size,
                                          std::size_t prime_subset, std::size_t random_count, std::uint64_t m,
                                          Xoshiro256ss& rng);

/// Dispatch on spec.kind. ChebyshevBalanced rebuilds the residue classes on
/// every call; experiments keep their own copy.
std::vector<std::uint64_t> draw(const SourceSpec& spec, const PrimeStore& store, std::size_t s, Xoshiro256ss& rng);

/// As above, with a generator seeded from spec.seed.
std::vector<std::uint64_t> draw(const SourceSpec& spec, const PrimeStore& store, std::size_t s);

}  // namespace sodp
