#include "sodp/sources.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace sodp {

namespace {

constexpr std::uint64_t kMaxFactor = std::numeric_limits<std::uint32_t>::max();

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw SourceError("product " + std::to_string(a) + " * " + std::to_string(b) + " overflows 64 bits");
    }
    return out;
}

std::uint64_t resolve_population(const PrimeStore& store, std::optional<std::uint64_t> population) {
    const std::uint64_t n = population.value_or(store.count());
    if (n == 0 || n > store.count()) {
        throw SourceError("population of " + std::to_string(n) + " primes exceeds store of " +
                          std::to_string(store.count()));
    }
    return n;
}

}  // namespace

const char* to_string(SourceKind kind) noexcept {
    switch (kind) {
        case SourceKind::Primes: return "primes";
        case SourceKind::RandomOdd: return "random-odd";
        case SourceKind::RandomAll: return "random-all";
        case SourceKind::PrimeProducts: return "products";
        case SourceKind::BiasedRandomProducts: return "biased-products";
        case SourceKind::Mixed: return "mixed";
        case SourceKind::ChebyshevBalanced: return "chebyshev";
    }
    return "unknown";
}

std::optional<SourceKind> parse_source_kind(std::string_view name) {
    for (auto kind : {SourceKind::Primes, SourceKind::RandomOdd, SourceKind::RandomAll, SourceKind::PrimeProducts,
                      SourceKind::BiasedRandomProducts, SourceKind::Mixed, SourceKind::ChebyshevBalanced}) {
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

void SourceSpec::validate() const {
    if (prime_count && *prime_count == 0) throw SourceError("prime_count must be positive");
    if (kind == SourceKind::BiasedRandomProducts && !(bias_rate >= 0.5 && bias_rate <= 1.0)) {
        throw SourceError("bias rate must lie in [0.5, 1]");
    }
    if (kind == SourceKind::Mixed && !(prime_fraction >= 0.0 && prime_fraction <= 1.0)) {
        throw SourceError("prime fraction must lie in [0, 1]");
    }
    if (range_max) {
        if ((kind == SourceKind::RandomOdd || kind == SourceKind::BiasedRandomProducts) && *range_max < 3) {
            throw SourceError("range_max must be >= 3 for odd draws");
        }
        if (*range_max < 2) throw SourceError("range_max must be >= 2");
        if (kind == SourceKind::BiasedRandomProducts && *range_max > kMaxFactor) {
            throw SourceError("range_max must be < 2^32 so products fit in 64 bits");
        }
    }
}

std::uint64_t SourceSpec::population(const PrimeStore& store) const { return resolve_population(store, prime_count); }

std::uint64_t SourceSpec::resolved_range_max(const PrimeStore& store) const {
    return range_max.value_or(store[population(store) - 1]);
}

std::uint64_t floor_count(long double v) {
    if (!(v >= 0)) return 0;
    const long double nearest = std::nearbyint(v);
    if (std::abs(v - nearest) <= 1e-9L * std::max(1.0L, v)) return static_cast<std::uint64_t>(nearest);
    return static_cast<std::uint64_t>(std::floor(v));
}

std::vector<std::uint64_t> draw_random_odd(std::uint64_t m, std::size_t s, Xoshiro256ss& rng) {
    if (m < 3) throw SourceError("random odd draws need m >= 3");
    const std::uint64_t odd_values = (m - 1) / 2;  // 3, 5, ..., largest odd <= m
    std::vector<std::uint64_t> out(s);
    for (auto& v : out) v = 3 + 2 * rng.uniform_below(odd_values);
    return out;
}

std::vector<std::uint64_t> draw_uniform(std::uint64_t lo, std::uint64_t hi, std::size_t s, Xoshiro256ss& rng) {
    if (lo > hi) throw SourceError("empty uniform range");
    std::vector<std::uint64_t> out(s);
    for (auto& v : out) v = rng.uniform_between(lo, hi);
    return out;
}

std::vector<std::uint64_t> draw_prime_products(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng,
                                               std::optional<std::uint64_t> population) {
    const std::uint64_t n = resolve_population(store, population);
    checked_product(store[n - 1], store[n - 1]);
    std::vector<std::uint64_t> out(s);
    for (auto& v : out) {
        const std::uint64_t p = store[rng.uniform_below(n)];
        const std::uint64_t q = store[rng.uniform_below(n)];
        v = p * q;
    }
    return out;
}

std::vector<std::uint64_t> build_biased_pool(double r, std::size_t s, std::uint64_t m, Base base,
                                             Xoshiro256ss& rng, int max_attempts) {
    if (!(r >= 0.5 && r <= 1.0)) throw SourceError("bias rate must lie in [0.5, 1]");
    if (m < 3) throw SourceError("biased pool needs m >= 3");
    const std::uint64_t want_even = floor_count(static_cast<long double>(r) * s);
    const std::uint64_t want_odd = s - want_even;
    const std::uint64_t odd_values = (m - 1) / 2;
    const ParityTable& table = parity_table(base);

    std::vector<std::uint64_t> evens;
    std::vector<std::uint64_t> odds;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        evens.clear();
        odds.clear();
        for (std::size_t i = 0; i < 3 * s; ++i) {
            const std::uint64_t v = 3 + 2 * rng.uniform_below(odd_values);
            (table.is_odd(v) ? odds : evens).push_back(v);
        }
        if (evens.size() < want_even || odds.size() < want_odd) continue;
        std::vector<std::uint64_t> pool;
        pool.reserve(s);
        pool.insert(pool.end(), evens.begin(), evens.begin() + static_cast<std::ptrdiff_t>(want_even));
        pool.insert(pool.end(), odds.begin(), odds.begin() + static_cast<std::ptrdiff_t>(want_odd));
        return pool;
    }
    throw SourceError("could not build a parity-biased pool after " + std::to_string(max_attempts) + " attempts");
}

std::vector<std::uint64_t> draw_biased_random_products(double r, std::size_t s, std::uint64_t m,
                                                       Xoshiro256ss& rng, Base base) {
    if (m > kMaxFactor) throw SourceError("range_max must be < 2^32 so products fit in 64 bits");
    const auto pool = build_biased_pool(r, s, m, base, rng);
    std::vector<std::uint64_t> out(s);
    for (auto& v : out) {
        const std::uint64_t a = pool[rng.uniform_below(pool.size())];
        const std::uint64_t b = pool[rng.uniform_below(pool.size())];
        v = a * b;
    }
    return out;
}

std::vector<std::uint64_t> draw_mixed(const PrimeStore& store, std::size_t s, double x, std::uint64_t m,
                                      Xoshiro256ss& rng, std::optional<std::uint64_t> population) {
    if (!(x >= 0.0 && x <= 1.0)) throw SourceError("prime fraction must lie in [0, 1]");
    if (m < 2) throw SourceError("mixed draws need m >= 2");
    const std::uint64_t n = resolve_population(store, population);
    const std::uint64_t random_count = floor_count((1.0L - x) * s);
    std::vector<std::uint64_t> out(s);
    std::size_t i = 0;
    for (; i < random_count; ++i) out[i] = rng.uniform_between(2, m);
    for (; i < s; ++i) out[i] = store[rng.uniform_below(n)];
    return out;
}

ResidueClasses ResidueClasses::of(const PrimeStore& store, std::optional<std::uint64_t> population) {
    const std::uint64_t n = resolve_population(store, population);
    if (n > std::numeric_limits<std::uint32_t>::max()) throw SourceError("store too large for 32-bit class indices");
    ResidueClasses out;
    for (std::uint64_t i = 0; i < n; ++i) {
        switch (store[i] & 3U) {
            case 1: out.one_mod4.push_back(static_cast<std::uint32_t>(i)); break;
            case 3: out.three_mod4.push_back(static_cast<std::uint32_t>(i)); break;
            default: break;  // only the prime 2
        }
    }
    return out;
}

std::vector<std::uint64_t> draw_chebyshev_balanced(const PrimeStore& store, const ResidueClasses& classes,
                                                   std::size_t s, Xoshiro256ss& rng) {
    if (s % 2 != 0) throw SourceError("Chebyshev-balanced samples need an even size");
    const std::size_t half = s / 2;
    if (classes.one_mod4.size() < half || classes.three_mod4.size() < half) {
        throw SourceError("not enough primes in a residue class mod 4 for a sample of " + std::to_string(s));
    }
    std::vector<std::uint64_t> out(s);
    for (std::size_t i = 0; i < half; ++i) out[i] = store[classes.one_mod4[rng.uniform_below(classes.one_mod4.size())]];
    for (std::size_t i = half; i < s; ++i) {
        out[i] = store[classes.three_mod4[rng.uniform_below(classes.three_mod4.size())]];
    }
    shuffle(std::span<std::uint64_t>(out), rng);
    return out;
}

std::vector<std::uint64_t> draw_chebyshev_balanced(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng) {
    return draw_chebyshev_balanced(store, ResidueClasses::of(store), s, rng);
}

ModPairsPlan plan_mod_pairs(const PrimeStore& store, std::size_t prime_pool_size, std::size_t prime_subset,
                            std::size_t random_count, std::uint64_t m, Xoshiro256ss& rng) {
    if (prime_subset > prime_pool_size || prime_pool_size > store.count()) {
        throw SourceError("mod pairs need prime_subset <= prime_pool_size <= store count");
    }
    if (m < 2) throw SourceError("mod pairs need m >= 2");
    std::vector<std::uint64_t> indices(prime_pool_size);
    std::iota(indices.begin(), indices.end(), 0);
    ModPairsPlan plan;
    plan.primes.reserve(prime_subset);
    for (std::size_t i = 0; i < prime_subset; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(prime_pool_size - i));
        std::swap(indices[i], indices[j]);
        plan.primes.push_back(store[indices[i]]);
    }
    plan.divisors = draw_uniform(2, m, random_count, rng);
    return plan;
}

std::vector<std::uint64_t> draw_mod_pairs(const PrimeStore& store, std::size_t prime_pool_size,
                                          std::size_t prime_subset, std::size_t random_count, std::uint64_t m,
                                          Xoshiro256ss& rng) {
    const auto plan = plan_mod_pairs(store, prime_pool_size, prime_subset, random_count, m, rng);
    std::vector<std::uint64_t> out;
    out.reserve(plan.size());
    plan.for_each_residue([&](std::uint64_t v) { out.push_back(v); });
    return out;
}

std::vector<std::uint64_t> draw(const SourceSpec& spec, const PrimeStore& store, std::size_t s, Xoshiro256ss& rng) {
    spec.validate();
    if (s == 0) throw SourceError("sample size must be positive");
    const std::uint64_t n = spec.population(store);
    const std::uint64_t m = spec.resolved_range_max(store);
    switch (spec.kind) {
        case SourceKind::Primes: {
            std::vector<std::uint64_t> out(s);
            for (auto& v : out) v = store[rng.uniform_below(n)];
            return out;
        }
        case SourceKind::RandomOdd: return draw_random_odd(m, s, rng);
        case SourceKind::RandomAll: return draw_uniform(2, m, s, rng);
        case SourceKind::PrimeProducts: return draw_prime_products(store, s, rng, n);
        case SourceKind::BiasedRandomProducts: return draw_biased_random_products(spec.bias_rate, s, m, rng, spec.base);
        case SourceKind::Mixed: return draw_mixed(store, s, spec.prime_fraction, m, rng, n);
        case SourceKind::ChebyshevBalanced:
            return draw_chebyshev_balanced(store, ResidueClasses::of(store, n), s, rng);
    }
    throw SourceError("unknown source kind");
}

std::vector<std::uint64_t> draw(const SourceSpec& spec, const PrimeStore& store, std::size_t s) {
    Xoshiro256ss rng(spec.seed);
    return draw(spec, store, s, rng);
}

}  // namespace sodp
