#include "sodp/prime_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <new>

namespace sodp {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'D', 'P'};
constexpr std::size_t kHeaderBytes = 16;

// Odd numbers per sieve segment; 256 KiB of flags stays in L2.
constexpr std::uint64_t kSegmentOdds = std::uint64_t{1} << 18;

std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

// Odd primes up to `limit` with a plain sieve; only used for sieving primes.
std::vector<std::uint64_t> odd_primes_up_to(std::uint64_t limit) {
    std::vector<std::uint64_t> out;
    if (limit < 3) return out;
    std::vector<char> composite(limit / 2 + 1, 0);  // index i <-> 2i+1
    for (std::uint64_t i = 1; 2 * i + 1 <= limit; ++i) {
        if (composite[i]) continue;
        const std::uint64_t p = 2 * i + 1;
        out.push_back(p);
        for (std::uint64_t m = p * p; m <= limit; m += 2 * p) composite[m / 2] = 1;
    }
    return out;
}

void put_le(std::uint64_t v, unsigned char* dst, int bytes) {
    for (int i = 0; i < bytes; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_le(const unsigned char* src, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
    return v;
}

}  // namespace

PrimeStore::PrimeStore(std::vector<std::uint64_t> primes) : primes_(std::move(primes)) {
    if (primes_.empty()) throw std::invalid_argument("PrimeStore needs at least one prime");
    if (primes_.front() != 2) throw std::invalid_argument("PrimeStore must start at 2");
}

std::uint64_t nth_prime_upper_bound(std::uint64_t n) {
    if (n < 6) return 13;
    const double x = static_cast<double>(n);
    const double bound = x * (std::log(x) + std::log(std::log(x)));
    return static_cast<std::uint64_t>(std::ceil(bound)) + 1;
}

PrimeStore build_primes(std::uint64_t count) {
    if (count == 0) throw std::invalid_argument("build_primes: count must be >= 1");

    std::vector<std::uint64_t> primes;
    try {
        primes.reserve(count);
        primes.push_back(2);

        std::uint64_t limit = nth_prime_upper_bound(count);
        std::uint64_t low = 3;  // next odd number to sieve
        std::vector<char> composite(kSegmentOdds);

        while (primes.size() < count) {
            const auto base_primes = odd_primes_up_to(isqrt(limit));
            while (primes.size() < count && low <= limit) {
                const std::uint64_t high = std::min(limit, low + 2 * (kSegmentOdds - 1));
                const std::uint64_t odds = (high - low) / 2 + 1;
                std::fill_n(composite.begin(), odds, 0);
                for (const std::uint64_t p : base_primes) {
                    const std::uint64_t square = p * p;
                    if (square > high) break;
                    std::uint64_t first = square;
                    if (first < low) {
                        first = (low + p - 1) / p * p;
                        if ((first & 1U) == 0) first += p;
                    }
                    for (std::uint64_t m = first; m <= high; m += 2 * p) composite[(m - low) / 2] = 1;
                }
                for (std::uint64_t i = 0; i < odds && primes.size() < count; ++i) {
                    if (!composite[i]) primes.push_back(low + 2 * i);
                }
                low = high + 2;
            }
            // The bound is a theorem for n >= 6, but keep going rather than truncate.
            limit += limit / 4 + 64;
        }
    } catch (const std::bad_alloc&) {
        throw std::length_error("build_primes: not enough memory for " + std::to_string(count) + " primes");
    }
    return PrimeStore(std::move(primes));
}

const char* to_string(CacheError::Kind kind) noexcept {
    switch (kind) {
        case CacheError::Kind::Io: return "io";
        case CacheError::Kind::BadHeader: return "bad-header";
        case CacheError::Kind::Truncated: return "truncated";
        case CacheError::Kind::ChecksumMismatch: return "checksum-mismatch";
        case CacheError::Kind::TrailingData: return "trailing-data";
    }
    return "unknown";
}

std::uint64_t cache_checksum(std::span<const std::uint64_t> primes) noexcept {
    std::uint64_t sum = 0;
    for (const std::uint64_t p : primes) sum += p;
    return sum;
}

void save_cache(const PrimeStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError(CacheError::Kind::Io, "cannot open " + path.string() + " for writing");

    unsigned char header[kHeaderBytes];
    std::memcpy(header, kMagic, 4);
    put_le(kCacheVersion, header + 4, 4);
    put_le(store.count(), header + 8, 8);
    out.write(reinterpret_cast<const char*>(header), kHeaderBytes);

    const auto primes = store.primes();
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(primes.data()),
                  static_cast<std::streamsize>(primes.size_bytes()));
    } else {
        std::vector<unsigned char> buffer(8 * 4096);
        for (std::size_t i = 0; i < primes.size(); i += 4096) {
            const std::size_t n = std::min<std::size_t>(4096, primes.size() - i);
            for (std::size_t j = 0; j < n; ++j) put_le(primes[i + j], buffer.data() + 8 * j, 8);
            out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(8 * n));
        }
    }

    unsigned char trailer[8];
    put_le(cache_checksum(primes), trailer, 8);
    out.write(reinterpret_cast<const char*>(trailer), 8);
    out.flush();
    if (!out) throw CacheError(CacheError::Kind::Io, "write failed for " + path.string());
}

PrimeStore load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw CacheError(CacheError::Kind::Io, "cannot open " + path.string());
    const auto file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);

    unsigned char header[kHeaderBytes] = {};
    const auto head = static_cast<std::streamsize>(std::min<std::uint64_t>(file_size, kHeaderBytes));
    if (!in.read(reinterpret_cast<char*>(header), head)) throw CacheError(CacheError::Kind::Io, "read failed: " + path.string());
    if (file_size < 4 || std::memcmp(header, kMagic, 4) != 0) {
        throw CacheError(CacheError::Kind::BadHeader, path.string() + ": bad magic bytes");
    }
    if (file_size < kHeaderBytes) throw CacheError(CacheError::Kind::Truncated, path.string() + ": header cut short");
    const auto version = static_cast<std::uint32_t>(get_le(header + 4, 4));
    if (version != kCacheVersion) {
        throw CacheError(CacheError::Kind::BadHeader,
                         path.string() + ": unsupported format version " + std::to_string(version));
    }
    const std::uint64_t count = get_le(header + 8, 8);
    if (count == 0) throw CacheError(CacheError::Kind::BadHeader, path.string() + ": zero count");

    const std::uint64_t payload = file_size - kHeaderBytes;
    if (count > payload / 8 || payload - 8 * count < 8) {
        throw CacheError(CacheError::Kind::Truncated,
                         path.string() + ": file too short for " + std::to_string(count) + " primes");
    }
    if (payload - 8 * count > 8) {
        throw CacheError(CacheError::Kind::TrailingData, path.string() + ": bytes after checksum");
    }

    std::vector<std::uint64_t> primes(count);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(primes.data()), static_cast<std::streamsize>(8 * count));
    } else {
        std::vector<unsigned char> buffer(8 * 4096);
        for (std::size_t i = 0; i < count && in; i += 4096) {
            const std::size_t n = std::min<std::size_t>(4096, count - i);
            in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(8 * n));
            for (std::size_t j = 0; j < n; ++j) primes[i + j] = get_le(buffer.data() + 8 * j, 8);
        }
    }
    unsigned char trailer[8];
    if (!in || !in.read(reinterpret_cast<char*>(trailer), 8)) {
        throw CacheError(CacheError::Kind::Truncated, path.string() + ": payload cut short");
    }
    const std::uint64_t stored = get_le(trailer, 8);
    if (stored != cache_checksum(primes)) {
        throw CacheError(CacheError::Kind::ChecksumMismatch, path.string() + ": checksum mismatch");
    }
    if (primes.front() != 2) throw CacheError(CacheError::Kind::BadHeader, path.string() + ": first prime is not 2");
    return PrimeStore(std::move(primes));
}

std::vector<std::uint64_t> sample_primes(const PrimeStore& store, std::size_t s, Xoshiro256ss& rng) {
    std::vector<std::uint64_t> out(s);
    for (auto& v : out) v = store[rng.uniform_below(store.count())];
    return out;
}

}  // namespace sodp
