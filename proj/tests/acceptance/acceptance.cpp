// Acceptance harness: one PASS/FAIL line per criterion.
//
//   acceptance --cache build/primes50m.sodp            all criteria
//   acceptance --cache build/primes50m.sodp --only 3   a single criterion
//
// The cache must hold the first 5x10^7 primes. Criteria that need the full
// store load it once; the rest build what they need.

#include "sodp/cli.hpp"
#include "sodp/digits.hpp"
#include "sodp/experiments.hpp"
#include "sodp/prime_store.hpp"
#include "sodp/rng.hpp"
#include "sodp/sources.hpp"
#include "sodp/stats.hpp"

#include "../support/oracles.hpp"
#include "../support/published.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sodp;

namespace {

constexpr std::uint64_t kFullCount = 50'000'000;
constexpr std::uint64_t kFiftyMillionthPrime = 982'451'653;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path cache;
    unsigned threads = 0;

    const PrimeStore& store() {
        if (!store_) {
            store_ = load_cache(cache);
            if (store_->count() != kFullCount) {
                throw std::runtime_error(cache.string() + " holds " + std::to_string(store_->count()) +
                                         " primes, expected " + std::to_string(kFullCount));
            }
        }
        return *store_;
    }

    const Workbench& bench() {
        if (!bench_) bench_ = std::make_unique<Workbench>(store(), ExecutionOptions{threads});
        return *bench_;
    }

private:
    std::optional<PrimeStore> store_;
    std::unique_ptr<Workbench> bench_;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out << std::setprecision(precision) << v;
    return out.str();
}

SourceSpec spec_of(SourceKind kind) {
    SourceSpec spec;
    spec.kind = kind;
    return spec;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("sodp_accept_" + tag + "_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// -- 1. census -----------------------------------------------------------------

Outcome census(Context&) {
    TempDir dir("census");
    const auto cache = (dir.path / "primes.sodp").string();
    const auto sieve = run_cli({"sieve", "--count", std::to_string(kFullCount), "--cache", cache});
    if (sieve.code != 0) return {false, "sieve exited " + std::to_string(sieve.code) + ": " + sieve.err};
    const auto result = run_cli({"census", "--cache", cache});
    if (result.code != 0) return {false, "census exited " + std::to_string(result.code) + ": " + result.err};
    const std::string expected_row = "50000000,10,25032384,24967616";
    const bool found = result.out.find("\n" + expected_row + "\n") != std::string::npos;
    const auto last = result.out.substr(result.out.rfind('\n', result.out.size() - 2) + 1);
    return {found, "census row " + last.substr(0, last.size() - 1)};
}

// -- 2. the 5x10^7-th prime -----------------------------------------------------

// Plain odd-only sieve of Eratosthenes up to `limit`, counting primes until
// the `n`-th. Shares nothing with the segmented sieve under test.
std::uint64_t nth_prime_by_plain_sieve(std::uint64_t n, std::uint64_t limit) {
    std::vector<bool> composite(limit / 2 + 1, false);  // index i stands for 2i+1
    std::uint64_t found = 1;                            // the prime 2
    if (n == 1) return 2;
    for (std::uint64_t i = 1; 2 * i + 1 <= limit; ++i) {
        if (composite[i]) continue;
        const std::uint64_t p = 2 * i + 1;
        if (++found == n) return p;
        for (std::uint64_t j = p * p; j <= limit; j += 2 * p) composite[j / 2] = true;
    }
    throw std::runtime_error("limit too small");
}

Outcome fifty_millionth_prime(Context& ctx) {
    const std::uint64_t oracle_value = nth_prime_by_plain_sieve(kFullCount, 1'000'000'000);
    const std::uint64_t stored = ctx.store()[kFullCount - 1];
    const std::uint64_t built = build_primes(kFullCount).max_prime();
    const bool pass = oracle_value == kFiftyMillionthPrime && stored == kFiftyMillionthPrime &&
                      built == kFiftyMillionthPrime;
    return {pass, "plain sieve " + std::to_string(oracle_value) + ", cache " + std::to_string(stored) +
                      ", fresh build " + std::to_string(built)};
}

// -- 3. prime sweep reproduction -------------------------------------------------

Outcome prime_sweep(Context& ctx) {
    const std::vector<std::uint64_t> sizes = {100'000, 1'000'000, 5'000'000};
    const std::map<std::uint64_t, double> target = {{100'000, 12.80}, {1'000'000, 43.03}, {5'000'000, 90.53}};
    const auto sweep = run_parity_sweep(ctx.bench(), sizes, 1000, spec_of(SourceKind::Primes), kDecimal, kDefaultSeed);
    bool pass = true;
    std::string detail;
    for (const auto& p : sweep.points) {
        const double want = target.at(static_cast<std::uint64_t>(p.axis_value));
        const double rel = std::fabs(p.summary.z_score - want) / want;
        const bool ok = rel <= 0.10;
        pass = pass && ok;
        detail += "s=" + fmt(p.axis_value) + " z=" + fmt(p.summary.z_score) + " (target " + fmt(want) + ", " +
                  fmt(100 * rel, 3) + "% off" + (ok ? "" : ", outside 10%") + ") ";
    }
    return {pass, detail};
}

// -- 4. random baseline ------------------------------------------------------------

Outcome random_baseline(Context& ctx) {
    const auto sizes = default_sample_sizes();
    int passing = 0;
    double worst = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        const auto sweep = run_parity_sweep(ctx.bench(), sizes, 1000, spec_of(SourceKind::RandomOdd), kDecimal,
                                            derive_seed(kDefaultSeed, run));
        const auto zs = sweep.z_scores();
        const double max_z = *std::max_element(zs.begin(), zs.end());
        worst = std::max(worst, max_z);
        if (max_z < 3) ++passing;
        std::cerr << "  random baseline run " << run << ": max z " << fmt(max_z) << '\n';
    }
    return {passing >= 95, std::to_string(passing) + "/100 runs with every z < 3; largest z " + fmt(worst)};
}

// -- 5. distinguisher ------------------------------------------------------------------

Outcome distinguisher(Context& ctx) {
    int primes_yes = 0;
    int random_no = 0;
    double min_prime_z = 1e300;
    double max_random_z = 0;
    for (std::uint64_t run = 0; run < 50; ++run) {
        const std::uint64_t seed = derive_seed(kDefaultSeed, run);
        const auto p = distinguish(ctx.bench(), spec_of(SourceKind::Primes), seed);
        const auto r = distinguish(ctx.bench(), spec_of(SourceKind::RandomOdd), seed);
        primes_yes += p.verdict == Verdict::Yes ? 1 : 0;
        random_no += r.verdict == Verdict::No ? 1 : 0;
        min_prime_z = std::min(min_prime_z, p.z_avg);
        max_random_z = std::max(max_random_z, r.z_avg);
    }
    return {primes_yes == 50 && random_no == 50,
            "primes Yes " + std::to_string(primes_yes) + "/50 (smallest z " + fmt(min_prime_z) + "), random No " +
                std::to_string(random_no) + "/50 (largest z " + fmt(max_random_z) + ")"};
}

// -- 6. Chebyshev bounds ------------------------------------------------------------------

Outcome chebyshev_table(Context&) {
    int matched = 0;
    std::string misses;
    for (std::size_t i = 0; i < published::kPrimeZScores.size(); ++i) {
        const double bound = chebyshev_bound(published::kPrimeZScores[i].y);
        const int exponent = static_cast<int>(std::floor(std::log10(bound)));
        int mantissa = static_cast<int>(std::lround(bound / std::pow(10.0, exponent - 1)));
        int e = exponent;
        if (mantissa == 100) {
            mantissa = 10;
            ++e;
        }
        const auto& want = published::kChebyshevBounds[i];
        if (mantissa == want.mantissa && e == want.exponent) {
            ++matched;
        } else {
            misses += " z=" + fmt(published::kPrimeZScores[i].y) + " gives " + fmt(bound, 3);
        }
    }
    return {matched == 14, std::to_string(matched) + "/14 rows agree to 2 significant figures" + misses};
}

// -- 7. mixed sweep ------------------------------------------------------------------------

Outcome mixed_sweep(Context& ctx) {
    const std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const auto sweep = run_mixed_sweep(ctx.bench(), 300'000, fractions, 1000, std::nullopt, kDefaultSeed);
    if (!sweep.fit) return {false, "no fit: " + sweep.fit_note};
    const auto& fit = *sweep.fit;
    const bool pass = std::fabs(fit.slope() - 0.221) <= 0.03 && fit.r_squared >= 0.95 && fit.p_value < 1e-4;
    return {pass, "slope " + fmt(fit.slope()) + " per percent, intercept " + fmt(fit.intercept()) + ", r^2 " +
                      fmt(fit.r_squared) + ", p " + fmt(fit.p_value, 3)};
}

// -- 8. quadratic fit of the published curve ---------------------------------------------------

Outcome quadratic_curve(Context&) {
    const auto fit = quadratic_fit_lnx(published::kPrimeZScores);
    auto within = [](double got, double want) { return std::fabs(got - want) <= 0.05 * std::fabs(want); };
    const bool pass = within(fit.c2, published::kQuadC2) && within(fit.c1, published::kQuadC1) &&
                      within(fit.c0, published::kQuadC0) && std::fabs(fit.sse - published::kQuadSse) <= 2;
    return {pass, "c2 " + fmt(fit.c2, 5) + ", c1 " + fmt(fit.c1, 6) + ", c0 " + fmt(fit.c0, 6) + ", sse " +
                      fmt(fit.sse, 5)};
}

// -- 9. products ------------------------------------------------------------------------------

// Two-sided p-value of a Spearman coefficient over n points, t approximation.
double spearman_p(double rho, std::size_t n) {
    if (std::fabs(rho) >= 1) return 0;
    const double df = static_cast<double>(n) - 2;
    return students_t_two_sided_p(rho * std::sqrt(df / (1 - rho * rho)), df);
}

Outcome products(Context& ctx) {
    const auto sizes = default_sample_sizes();
    const auto prod = run_product_experiment(ctx.bench(), sizes, 100, kDefaultSeed);
    const auto zs = prod.z_scores();
    const auto above = std::count_if(zs.begin(), zs.end(), [](double z) { return z > 1; });
    const double prod_rho = spearman_rho(prod.axis_values(), zs);

    std::vector<double> rates;
    for (int i = 0; i <= 10; ++i) rates.push_back(0.5 + 0.05 * i);
    const auto bias = run_bias_sweep(ctx.bench(), rates, 400'000, 100, std::nullopt, kDefaultSeed);
    std::vector<double> signed_z;
    for (const auto& p : bias.points) signed_z.push_back(p.summary.z_signed);
    const bool all_even = std::all_of(signed_z.begin(), signed_z.end(), [](double z) { return z > 0; });
    const double bias_rho = spearman_rho(bias.axis_values(), signed_z);
    const double bias_p = spearman_p(bias_rho, signed_z.size());

    const bool pass = above * 2 > static_cast<long>(zs.size()) && prod_rho > 0 && all_even && bias_p >= 0.05;
    return {pass, "products: z > 1 at " + std::to_string(above) + "/" + std::to_string(zs.size()) +
                      " sizes, Spearman " + fmt(prod_rho, 3) + "; biased: min signed z " +
                      fmt(*std::min_element(signed_z.begin(), signed_z.end())) + ", Spearman over r " +
                      fmt(bias_rho, 3) + " (p " + fmt(bias_p, 3) + ")"};
}

// -- 10. mod experiment --------------------------------------------------------------------------

Outcome mod_experiment(Context& ctx) {
    const auto full = run_mod_experiment(ctx.bench(), kDefaultSeed);

    // Reduced scale: recount every residue by hand from the chosen primes and
    // divisors, using decimal strings for the digit sums.
    ModExperimentConfig small;
    small.prime_pool_size = 1000;
    small.prime_subset = 20;
    small.random_count = 5000;
    small.range_max = 100'000;
    const std::uint64_t seed = 7;
    const auto reduced = run_mod_experiment(ctx.bench(), seed, small);
    Xoshiro256ss rng(trial_seed(seed, 0));
    const auto plan = plan_mod_pairs(ctx.store(), small.prime_pool_size, small.prime_subset, small.random_count,
                                     *small.range_max, rng);
    bool plan_ok = plan.primes.size() == small.prime_subset && plan.divisors.size() == small.random_count;
    const auto pool = oracle::first_primes_by_trial_division(small.prime_pool_size);
    std::vector<std::uint64_t> seen;
    for (const auto p : plan.primes) {
        plan_ok = plan_ok && std::binary_search(pool.begin(), pool.end(), p);
        seen.push_back(p);
    }
    std::sort(seen.begin(), seen.end());
    plan_ok = plan_ok && std::adjacent_find(seen.begin(), seen.end()) == seen.end();
    std::uint64_t even = 0;
    for (const auto p : plan.primes) {
        for (const auto r : plan.divisors) {
            plan_ok = plan_ok && r >= 2 && r <= *small.range_max;
            even += oracle::digit_sum_is_even(p % r, 10) ? 1 : 0;
        }
    }
    const TrialSummary expected = summarize_total(even, small.prime_subset * small.random_count, 1);
    const bool reduced_ok = plan_ok && reduced.even_total == even && reduced.z_score == expected.z_score;

    return {full.z_score > 5 && reduced_ok,
            "full scale z " + fmt(full.z_score, 6) + " over " + std::to_string(full.sample_size) +
                " residues; reduced scale " + (reduced_ok ? "matches" : "differs from") + " the recount (" +
                std::to_string(reduced.even_total) + " vs " + std::to_string(even) + " even)"};
}

// -- 11. property suites ----------------------------------------------------------------------------

Outcome properties(Context& ctx) {
    std::vector<std::string> failures;
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };

    // Digit sums agree with the oracle and are congruent to n mod (b - 1).
    {
        Xoshiro256ss rng(derive_seed(kDefaultSeed, 11));
        std::uint64_t bad = 0;
        for (int i = 0; i < 1'000'000; ++i) {
            const std::uint64_t n = rng() >> rng.uniform_below(64);
            const std::uint64_t b = 2 + rng.uniform_below(35);
            const std::uint64_t sum = digit_sum(n, Base{b});
            if (sum != oracle::digit_sum(n, b)) ++bad;
            if (b > 2 && sum % (b - 1) != n % (b - 1)) ++bad;
            if ((digit_parity(n, Base{b}) == Parity::Even) != (sum % 2 == 0)) ++bad;
            // The table-driven kernel behind count_even must agree bit for bit.
            const std::uint64_t one[] = {n};
            if (count_even(one, Base{b}) != (sum % 2 == 0 ? 1U : 0U)) ++bad;
        }
        require(bad == 0, "digit-sum congruence: " + std::to_string(bad) + " mismatches");
    }

    // In an odd base the digit-sum parity is the parity of n, so every odd
    // prime has an odd digit sum.
    {
        const auto& store = ctx.store();
        const std::span<const std::uint64_t> first(store.primes().data(), 1'000'000);
        bool ok = true;
        for (std::uint64_t b = 3; b <= 35; b += 2) {
            ok = ok && count_even(first, Base{b}) == 1;  // only the prime 2
        }
        Xoshiro256ss rng(derive_seed(kDefaultSeed, 12));
        for (int i = 0; i < 100'000 && ok; ++i) {
            const std::uint64_t n = rng();
            const std::uint64_t b = 3 + 2 * rng.uniform_below(20);
            ok = (digit_parity(n, Base{b}) == Parity::Odd) == ((n & 1U) == 1);
        }
        require(ok, "odd-base degeneracy");
    }

    // Binomial CDF against exhaustive summation.
    {
        double worst = 0;
        for (int n = 1; n <= 20; ++n) {
            for (const double p : {0.01, 0.1, 0.25, 0.49935232, 0.5, 0.75, 0.99}) {
                for (int k = -1; k <= n + 1; ++k) {
                    const double got = binomial_cdf(k, static_cast<std::uint64_t>(n), p);
                    const double want = static_cast<double>(oracle::binomial_cdf_exhaustive(k, n, p));
                    worst = std::max(worst, std::fabs(got - want));
                }
            }
        }
        require(worst <= 1e-12, "binomial_cdf off by " + fmt(worst, 3));
    }

    // Fits against the normal-equations oracle.
    {
        Xoshiro256ss rng(derive_seed(kDefaultSeed, 13));
        double worst = 0;
        for (int round = 0; round < 200; ++round) {
            std::vector<Point> pts;
            std::vector<double> xs;
            std::vector<double> ys;
            const int n = 5 + static_cast<int>(rng.uniform_below(20));
            for (int i = 0; i < n; ++i) {
                const double x = 1 + static_cast<double>(i) * (1 + static_cast<double>(rng() >> 11) * 0x1p-53);
                const double y = 3 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1 + 0.5 * x;
                pts.push_back({x, y});
                xs.push_back(x);
                ys.push_back(y);
            }
            const auto lin = linear_fit(pts);
            const auto lin_ref = oracle::linear_normal_equations(xs, ys);
            worst = std::max({worst, std::fabs(lin.c0 - static_cast<double>(lin_ref.coeffs[0])),
                              std::fabs(lin.c1 - static_cast<double>(lin_ref.coeffs[1]))});
            const auto quad = quadratic_fit_lnx(pts);
            const auto quad_ref = oracle::quadratic_lnx_normal_equations(xs, ys);
            worst = std::max({worst, std::fabs(quad.c0 - static_cast<double>(quad_ref.coeffs[0])),
                              std::fabs(quad.c1 - static_cast<double>(quad_ref.coeffs[1])),
                              std::fabs(quad.c2 - static_cast<double>(quad_ref.coeffs[2])),
                              std::fabs(quad.sse - static_cast<double>(quad_ref.sse))});
        }
        require(worst <= 1e-9, "fits differ from the oracle by " + fmt(worst, 3));
    }

    // Cache round trip, both for a fresh store and for the full cache.
    {
        TempDir dir("roundtrip");
        const auto path = dir.path / "small.sodp";
        const auto store = build_primes(123'457);
        save_cache(store, path);
        const auto back = load_cache(path);
        require(std::ranges::equal(back.primes(), store.primes()), "round trip of 123457 primes");
        const auto again = dir.path / "again.sodp";
        save_cache(back, again);
        std::ifstream a(path, std::ios::binary);
        std::ifstream b(again, std::ios::binary);
        require(std::equal(std::istreambuf_iterator<char>(a), {}, std::istreambuf_iterator<char>(b), {}),
                "re-saved cache differs");
        require(ctx.store().max_prime() == kFiftyMillionthPrime, "full cache contents");
    }

    // Seeded outputs are bitwise identical across runs and thread counts.
    {
        TempDir dir("determinism");
        const auto cache = (dir.path / "p.sodp").string();
        require(run_cli({"sieve", "--count", "200000", "--cache", cache}).code == 0, "sieve for determinism");
        const std::vector<std::vector<std::string>> commands = {
            {"census"},
            {"sweep", "--sizes", "10000,20000,30000,40000", "--trials", "50"},
            {"sweep", "--source", "random-odd", "--sizes", "10000,20000", "--trials", "50"},
            {"sweep", "--source", "random-all", "--sizes", "10000", "--trials", "50"},
            {"distinguish", "--sample-size", "20000", "--trials", "50"},
            {"products", "--sizes", "5000,10000", "--trials", "20"},
            {"bias-sweep", "--rates", "0.5,0.8,1", "--sample-size", "5000", "--trials", "5"},
            {"mixed", "--fractions", "0.2,0.5,0.8", "--sample-size", "10000", "--trials", "20"},
            {"chebyshev", "--sizes", "1000,2000", "--trials", "20"},
            {"modexp", "--subset", "20", "--randoms", "10000"},
            {"bases", "--bases", "2,4,10,16", "--sample-size", "5000", "--trials", "20"},
        };
        for (auto args : commands) {
            args.insert(args.end(), {"--cache", cache});
            const auto first = run_cli(args);
            auto threaded = args;
            threaded.insert(threaded.end(), {"--threads", "4"});
            const auto second = run_cli(args);
            const auto third = run_cli(threaded);
            require(first.code == 0 && first.out == second.out && first.out == third.out,
                    "non-deterministic output from " + args[0]);
        }
    }

    std::string detail = "digit sums, odd bases, binomial, fits, cache, determinism";
    if (!failures.empty()) {
        detail = "failed:";
        for (const auto& f : failures) detail += " [" + f + "]";
    }
    return {failures.empty(), detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(Context&)> check;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the sodp workbench"};
    std::string cache;
    std::vector<int> only;
    unsigned threads = 0;
    app.add_option("--cache", cache, "cache holding the first 5x10^7 primes")->required();
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "census of the first 5x10^7 primes", census},
        {2, "5x10^7-th prime against a plain sieve", fifty_millionth_prime},
        {3, "prime sweep z-scores", prime_sweep},
        {4, "random-odd baseline", random_baseline},
        {5, "distinguisher verdicts", distinguisher},
        {6, "Chebyshev bound table", chebyshev_table},
        {7, "mixed-population slope", mixed_sweep},
        {8, "quadratic fit of the published curve", quadratic_curve},
        {9, "product experiments", products},
        {10, "primes modulo random divisors", mod_experiment},
        {11, "property suites", properties},
    };

    Context ctx;
    ctx.cache = cache;
    ctx.threads = threads;
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.check(ctx);
        } catch (const std::exception& e) {
            outcome = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << std::setw(2) << c.id << ' ' << (outcome.pass ? "PASS" : "FAIL") << "  " << c.name
                  << ": " << outcome.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
        if (!outcome.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
