#include "sodp/prime_store.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace sodp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sodp_store_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<unsigned char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CacheError::Kind load_error(const fs::path& p) {
    try {
        load_cache(p);
    } catch (const CacheError& e) {
        return e.kind();
    }
    FAIL("load_cache accepted a bad file");
    return CacheError::Kind::Io;
}

}  // namespace

TEST_CASE("small builds") {
    const auto five = build_primes(5);
    CHECK(std::vector<std::uint64_t>(five.begin(), five.end()) == std::vector<std::uint64_t>{2, 3, 5, 7, 11});
    CHECK(build_primes(1).max_prime() == 2);
    CHECK(build_primes(2).max_prime() == 3);
    CHECK(build_primes(25).max_prime() == 97);
    CHECK(build_primes(1000).max_prime() == 7919);
    CHECK_THROWS_AS(build_primes(0), std::invalid_argument);
}

TEST_CASE("build_primes matches trial division for every count up to 300") {
    const auto reference = oracle::first_primes_by_trial_division(300);
    for (std::size_t n = 1; n <= 300; ++n) {
        const auto store = build_primes(n);
        REQUIRE(store.count() == n);
        REQUIRE(std::equal(store.begin(), store.end(), reference.begin()));
    }
}

TEST_CASE("build_primes(200000) matches a plain sieve, across many segments") {
    const auto store = build_primes(200'000);
    const auto reference = oracle::primes_up_to(store.max_prime());
    REQUIRE(reference.size() == 200'000);
    CHECK(std::equal(store.begin(), store.end(), reference.begin()));
}

TEST_CASE("stored values pass Miller-Rabin and increase strictly") {
    const auto store = build_primes(1'000'000);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 1000; ++i) REQUIRE(oracle::is_prime_miller_rabin(store[gen() % store.count()]));
    for (std::size_t i = 1; i < store.count(); ++i) REQUIRE(store[i - 1] < store[i]);
    CHECK(store.max_prime() == 15'485'863);
}

TEST_CASE("the n-th prime bound is an upper bound") {
    const auto store = build_primes(100'000);
    for (std::size_t n = 1; n <= store.count(); n += (n < 100 ? 1 : 997)) {
        REQUIRE(nth_prime_upper_bound(n) >= store[n - 1]);
    }
    CHECK(nth_prime_upper_bound(1) == 13);
    CHECK(nth_prime_upper_bound(5) == 13);
    const double n = 1e6;
    CHECK(nth_prime_upper_bound(1'000'000) == doctest::Approx(n * (std::log(n) + std::log(std::log(n)))).epsilon(1e-6));
}

TEST_CASE("PrimeStore rejects obviously wrong lists") {
    CHECK_THROWS(PrimeStore(std::vector<std::uint64_t>{}));
    CHECK_THROWS(PrimeStore(std::vector<std::uint64_t>{3, 5}));
}

TEST_CASE("cache round trip is the identity") {
    TempDir dir;
    for (const std::uint64_t n : {1ULL, 2ULL, 10'000ULL}) {
        const auto store = build_primes(n);
        const auto file = dir.path / ("p" + std::to_string(n));
        save_cache(store, file);
        CHECK(load_cache(file) == store);
    }
}

TEST_CASE("cache byte layout") {
    TempDir dir;
    const auto file = dir.path / "p5";
    save_cache(build_primes(5), file);
    const auto bytes = read_bytes(file);
    REQUIRE(bytes.size() == 4 + 4 + 8 + 5 * 8 + 8);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SODP");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[8] == 5);
    CHECK(bytes[16] == 2);
    CHECK(bytes[24] == 3);
    CHECK(bytes[48] == 11);
    CHECK(bytes[56] == 28);  // 2+3+5+7+11
    for (std::size_t i = 57; i < 64; ++i) CHECK(bytes[i] == 0);
    CHECK(cache_checksum(build_primes(5).primes()) == 28);
}

TEST_CASE("cache load errors are distinguished") {
    TempDir dir;
    const auto good = dir.path / "good";
    save_cache(build_primes(100), good);
    const auto bytes = read_bytes(good);
    const auto bad = dir.path / "bad";

    CHECK(load_error(dir.path / "missing") == CacheError::Kind::Io);

    auto magic = bytes;
    magic[0] = 'X';
    write_bytes(bad, magic);
    CHECK(load_error(bad) == CacheError::Kind::BadHeader);

    auto version = bytes;
    version[4] = 2;
    write_bytes(bad, version);
    CHECK(load_error(bad) == CacheError::Kind::BadHeader);

    write_bytes(bad, std::vector<unsigned char>(bytes.begin(), bytes.begin() + 10));
    CHECK(load_error(bad) == CacheError::Kind::Truncated);

    write_bytes(bad, std::vector<unsigned char>(bytes.begin(), bytes.begin() + 16 + 8 * 50 + 3));
    CHECK(load_error(bad) == CacheError::Kind::Truncated);

    auto huge = bytes;
    huge[15] = 0x40;  // count far beyond the file size must not allocate
    write_bytes(bad, huge);
    CHECK(load_error(bad) == CacheError::Kind::Truncated);

    auto flipped = bytes;
    flipped[16 + 8 * 7] ^= 0x02;
    write_bytes(bad, flipped);
    CHECK(load_error(bad) == CacheError::Kind::ChecksumMismatch);

    auto trailing = bytes;
    trailing.push_back(0);
    write_bytes(bad, trailing);
    CHECK(load_error(bad) == CacheError::Kind::TrailingData);

    CHECK(std::string(to_string(CacheError::Kind::ChecksumMismatch)) == "checksum-mismatch");
}

TEST_CASE("sample_primes") {
    const PrimeStore two(std::vector<std::uint64_t>{2});
    Xoshiro256ss rng(1);
    CHECK(sample_primes(two, 3, rng) == std::vector<std::uint64_t>{2, 2, 2});

    const auto store = build_primes(1000);
    Xoshiro256ss a(77);
    Xoshiro256ss b(77);
    const auto s1 = sample_primes(store, 10, a);
    CHECK(s1 == sample_primes(store, 10, b));
    for (const auto p : s1) CHECK(oracle::is_prime_trial_division(p));
}

TEST_CASE("sample_primes frequency of a fixed prime is within 5 sigma") {
    const auto store = build_primes(100'000);
    Xoshiro256ss rng(12);
    const std::size_t s = 1'000'000;
    const auto sample = sample_primes(store, s, rng);
    const double p = 1.0 / store.count();
    for (const std::uint64_t target : {std::uint64_t{2}, store[500], store.max_prime()}) {
        const auto hits = static_cast<double>(std::count(sample.begin(), sample.end(), target));
        CHECK(std::abs(hits - s * p) < 5 * std::sqrt(s * p * (1 - p)));
    }
}
