#include "sodp/cli.hpp"

#include "sodp/experiments.hpp"
#include "sodp/report.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace sodp::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -- Flag values ------------------------------------------------------------------

// Accepts decimal, 0x-prefixed hex, or scientific notation that denotes an
// integer (5e7, 1.5e6).
std::uint64_t parse_u64(const std::string& text, const std::string& flag) {
    auto fail = [&] { return UsageError(flag + ": expected a nonnegative integer, got '" + text + "'"); };
    if (text.empty()) throw fail();
    std::uint64_t value = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        const auto res = std::from_chars(first + 2, last, value, 16);
        if (res.ec != std::errc() || res.ptr != last) throw fail();
        return value;
    }
    if (const auto res = std::from_chars(first, last, value); res.ec == std::errc() && res.ptr == last) return value;
    if (text.find_first_of("eE") == std::string::npos) throw fail();
    double real = 0;
    const auto res = std::from_chars(first, last, real);
    if (res.ec != std::errc() || res.ptr != last || !(real >= 0) || real > 9007199254740992.0 ||
        real != std::floor(real)) {
        throw fail();
    }
    return static_cast<std::uint64_t>(real);
}

std::uint64_t parse_positive(const std::string& text, const std::string& flag) {
    const std::uint64_t v = parse_u64(text, flag);
    if (v == 0) throw UsageError(flag + " must be positive");
    return v;
}

double parse_real(const std::string& text, const std::string& flag) {
    double value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw UsageError(flag + ": expected a real number, got '" + text + "'");
    }
    return value;
}

std::string hex(std::uint64_t v) {
    char buf[32] = "0x";
    const auto res = std::to_chars(buf + 2, buf + sizeof buf, v, 16);
    return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& format) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ';';
        out += format(values[i]);
    }
    return out;
}

std::string join_u64(const std::vector<std::uint64_t>& values) {
    return join(values, [](std::uint64_t v) { return std::to_string(v); });
}

std::string join_real(const std::vector<double>& values) { return join(values, format_real); }

// -- Raw options as typed on the command line ---------------------------------------

struct RawOptions {
    std::string seed = hex(kDefaultSeed);
    std::string base = "10";
    std::string count;
    std::string cache;
    std::string output;
    std::string threads;

    std::string source;
    std::string input;
    std::vector<std::string> sizes;
    std::vector<std::string> rates;
    std::vector<std::string> fractions;
    std::vector<std::string> bases;
    std::string sample_size;
    std::string trials;
    std::string threshold;
    std::string range_max;
    std::string rate;
    std::string fraction;
    std::string pool;
    std::string subset;
    std::string randoms;
    std::string plot_data;
    std::string fit_output;
};

// -- Resolved configuration -----------------------------------------------------------

struct Config {
    std::string command;
    std::uint64_t seed = kDefaultSeed;
    Base base = kDecimal;
    std::optional<std::uint64_t> count;  ///< explicit --count
    std::string cache;                   ///< resolved; empty means in-memory
    std::string output;
    unsigned threads = 0;

    SourceKind source = SourceKind::Primes;
    std::string input;
    std::vector<std::uint64_t> sizes;
    std::vector<double> rates;
    std::vector<double> fractions;
    std::vector<std::uint64_t> bases;
    std::uint64_t sample_size = 0;
    std::uint64_t trials = 0;
    double threshold = 5.0;
    std::optional<std::uint64_t> range_max;
    double rate = 0.5;
    double fraction = 0.0;
    ModExperimentConfig mod;
    std::string plot_data;
    std::string fit_output;

    std::uint64_t count_or_default() const { return count.value_or(kDefaultPrimeCount); }
};

std::vector<double> default_rates() {
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i) out.push_back(0.5 + 0.05 * i);
    return out;
}

std::vector<double> default_fractions() {
    std::vector<double> out;
    for (int i = 1; i <= 9; ++i) out.push_back(i / 10.0);
    return out;
}

void require_increasing(const std::vector<double>& v, const std::string& flag) {
    if (v.empty()) throw UsageError(flag + " needs at least one value");
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) throw UsageError(flag + " values must be strictly increasing");
    }
}

std::vector<std::uint64_t> parse_sizes(const std::vector<std::string>& raw, const std::string& flag) {
    std::vector<std::uint64_t> out;
    std::vector<double> check;
    for (const auto& s : raw) {
        out.push_back(parse_positive(s, flag));
        check.push_back(static_cast<double>(out.back()));
    }
    require_increasing(check, flag);
    return out;
}

std::vector<double> parse_reals(const std::vector<std::string>& raw, const std::string& flag, double lo, double hi) {
    std::vector<double> out;
    for (const auto& s : raw) {
        const double v = parse_real(s, flag);
        if (v < lo || v > hi) throw UsageError(flag + " values must lie in [" + format_real(lo) + ", " + format_real(hi) + "]");
        out.push_back(v);
    }
    require_increasing(out, flag);
    return out;
}

Config resolve(const std::string& command, const RawOptions& raw) {
    Config c;
    c.command = command;
    c.seed = parse_u64(raw.seed, "--seed");
    const std::uint64_t base = parse_u64(raw.base, "--base");
    if (base < 2) throw UsageError("--base must be >= 2");
    c.base = Base(base);
    if (!raw.count.empty()) c.count = parse_positive(raw.count, "--count");
    c.cache = !raw.cache.empty() ? raw.cache : default_cache_path(c.count_or_default());
    c.output = raw.output;
    if (!raw.threads.empty()) {
        const std::uint64_t t = parse_positive(raw.threads, "--threads");
        if (t > 4096) throw UsageError("--threads is capped at 4096");
        c.threads = static_cast<unsigned>(t);
    }
    c.plot_data = raw.plot_data;
    c.fit_output = raw.fit_output;

    auto size_or = [&](const std::string& text, std::uint64_t fallback, const char* flag) {
        return text.empty() ? fallback : parse_positive(text, flag);
    };
    auto trials_or = [&](std::uint64_t fallback) { return size_or(raw.trials, fallback, "--trials"); };
    if (!raw.range_max.empty()) {
        c.range_max = parse_u64(raw.range_max, "--range-max");
        if (*c.range_max < 3) throw UsageError("--range-max must be >= 3");
    }
    auto sizes_or_default = [&] {
        return raw.sizes.empty() ? default_sample_sizes() : parse_sizes(raw.sizes, "--sizes");
    };
    auto odd_base_check = [&] {
        if (c.base.is_odd()) {
            throw UsageError("base " + std::to_string(base) +
                             " is odd: every odd number has an odd digit sum there, so parity tests are degenerate");
        }
    };

    if (command == "sieve") {
        if (c.cache.empty()) throw UsageError("sieve needs --cache or SODP_CACHE_DIR");
    } else if (command == "census") {
    } else if (command == "sweep") {
        const auto kind = parse_source_kind(raw.source.empty() ? "primes" : raw.source);
        if (!kind) throw UsageError("--source: unknown source '" + raw.source + "'");
        c.source = *kind;
        c.sizes = sizes_or_default();
        c.trials = trials_or(1000);
        if (!raw.rate.empty()) c.rate = parse_real(raw.rate, "--rate");
        if (!raw.fraction.empty()) c.fraction = parse_real(raw.fraction, "--fraction");
        if (c.rate < 0.5 || c.rate > 1.0) throw UsageError("--rate must lie in [0.5, 1]");
        if (c.fraction < 0.0 || c.fraction > 1.0) throw UsageError("--fraction must lie in [0, 1]");
        if (c.source == SourceKind::ChebyshevBalanced) {
            for (const auto s : c.sizes) {
                if (s % 2 != 0) throw UsageError("chebyshev samples need even sizes");
            }
        }
        if (c.source == SourceKind::BiasedRandomProducts && c.range_max && *c.range_max > 0xffffffffULL) {
            throw UsageError("--range-max must be < 2^32 for biased products");
        }
    } else if (command == "distinguish") {
        c.input = raw.input;
        if (!c.input.empty() && !raw.source.empty()) throw UsageError("--input and --source are mutually exclusive");
        const auto kind = parse_source_kind(raw.source.empty() ? "primes" : raw.source);
        if (!kind) throw UsageError("--source: unknown source '" + raw.source + "'");
        c.source = *kind;
        if (c.source == SourceKind::BiasedRandomProducts || c.source == SourceKind::Mixed) {
            throw UsageError("distinguish supports primes, random-odd, random-all, products and chebyshev sources");
        }
        c.sample_size = size_or(raw.sample_size, 100'000, "--sample-size");
        c.trials = trials_or(1000);
        if (!raw.threshold.empty()) c.threshold = parse_real(raw.threshold, "--threshold");
        if (!(c.threshold > 0)) throw UsageError("--threshold must be positive");
        if (c.source == SourceKind::ChebyshevBalanced && c.sample_size % 2 != 0) {
            throw UsageError("chebyshev samples need an even size");
        }
    } else if (command == "products") {
        c.sizes = sizes_or_default();
        c.trials = trials_or(100);
    } else if (command == "bias-sweep") {
        c.rates = raw.rates.empty() ? default_rates() : parse_reals(raw.rates, "--rates", 0.5, 1.0);
        c.sample_size = size_or(raw.sample_size, 400'000, "--sample-size");
        c.trials = trials_or(100);
        if (c.range_max && *c.range_max > 0xffffffffULL) throw UsageError("--range-max must be < 2^32");
    } else if (command == "mixed") {
        c.fractions = raw.fractions.empty() ? default_fractions() : parse_reals(raw.fractions, "--fractions", 0.0, 1.0);
        c.sample_size = size_or(raw.sample_size, 300'000, "--sample-size");
        c.trials = trials_or(1000);
    } else if (command == "chebyshev") {
        c.sizes = sizes_or_default();
        c.trials = trials_or(100);
        for (const auto s : c.sizes) {
            if (s % 2 != 0) throw UsageError("chebyshev samples need even sizes");
        }
    } else if (command == "modexp") {
        c.mod.prime_pool_size = size_or(raw.pool, 1000, "--pool");
        c.mod.prime_subset = size_or(raw.subset, 100, "--subset");
        c.mod.random_count = size_or(raw.randoms, 1'000'000, "--randoms");
        if (c.mod.prime_subset > c.mod.prime_pool_size) throw UsageError("--subset cannot exceed --pool");
        if (c.range_max) c.mod.range_max = c.range_max;
        if (c.count && *c.count < c.mod.prime_pool_size) throw UsageError("--count is smaller than --pool");
    } else if (command == "bases") {
        if (raw.bases.empty()) {
            c.bases = {2, 4, 6, 8, 10, 16};
        } else {
            c.bases = parse_sizes(raw.bases, "--bases");
            for (const auto b : c.bases) {
                if (b < 2) throw UsageError("--bases values must be >= 2");
                if (b % 2 != 0) {
                    throw UsageError("base " + std::to_string(b) +
                                     " is odd: every odd prime has an odd digit sum there, so the test is degenerate");
                }
            }
        }
        c.sample_size = size_or(raw.sample_size, 100'000, "--sample-size");
        c.trials = trials_or(100);
    }
    if (command != "sieve" && command != "census" && command != "bases") odd_base_check();
    return c;
}

// -- Metadata -------------------------------------------------------------------------

// How each random baseline draws its numbers; recorded because the choice
// varies between experiments.
const char* draw_domain(SourceKind kind) {
    switch (kind) {
        case SourceKind::Primes: return "uniform-prime-index";
        case SourceKind::RandomOdd: return "odd-uniform[3,m]";
        case SourceKind::RandomAll: return "uniform[2,m]";
        case SourceKind::PrimeProducts: return "prime*prime";
        case SourceKind::BiasedRandomProducts: return "pool-odd[3,m]*pool-odd[3,m]";
        case SourceKind::Mixed: return "uniform[2,m]+primes";
        case SourceKind::ChebyshevBalanced: return "half-1mod4+half-3mod4";
    }
    return "unknown";
}

class Metadata {
public:
    explicit Metadata(const std::string& command) : line_("# sodp " + command) {}
    void add(const std::string& key, const std::string& value) { line_ += ' ' + key + '=' + value; }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    const std::string& line() const { return line_; }

private:
    std::string line_;
};

// -- Inputs ---------------------------------------------------------------------------

PrimeStore obtain_store(const Config& c) {
    if (!c.cache.empty() && std::filesystem::exists(c.cache)) {
        PrimeStore store = load_cache(c.cache);
        if (c.count && store.count() != *c.count) {
            throw DataError("cache " + c.cache + " holds " + std::to_string(store.count()) + " primes but --count is " +
                            std::to_string(*c.count));
        }
        return store;
    }
    PrimeStore store = build_primes(c.count_or_default());
    if (!c.cache.empty()) save_cache(store, c.cache);
    return store;
}

std::vector<std::uint64_t> read_numbers(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file " + path);
    std::vector<std::uint64_t> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::uint64_t v = 0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (line.empty() || line[0] == '+' || res.ec != std::errc() || res.ptr != line.data() + line.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected one nonnegative integer, got '" + line +
                            "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw DataError("input file " + path + " holds no numbers");
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw DataError("write failed: " + path);
}

// -- Commands ---------------------------------------------------------------------------

struct Outputs {
    std::ostringstream main;
    std::optional<std::string> plot;
    std::optional<std::string> fit;
};

void emit_fit(const Config& c, const Metadata& meta, const SweepResult& sweep, Outputs& out) {
    std::ostringstream text;
    if (sweep.fit) {
        write_fit_csv(text, *sweep.fit);
    } else {
        text << "# fit unavailable: " << sweep.fit_note << '\n';
    }
    if (c.fit_output.empty()) {
        out.main << "# fit\n" << text.str();
    } else {
        out.fit = meta.line() + '\n' + text.str();
    }
}

void emit_sweep(const Config& c, const SweepResult& sweep, Outputs& out) {
    write_sweep_csv(out.main, sweep);
    if (!c.plot_data.empty()) {
        std::ostringstream plot;
        write_sweep_csv(plot, sweep);
        out.plot = plot.str();
    }
}

void add_common(Metadata& meta, const Config& c, const PrimeStore* store) {
    meta.add("seed", hex(c.seed));
    meta.add("base", c.base.value());
    if (store != nullptr) {
        meta.add("count", store->count());
        meta.add("max_prime", store->max_prime());
    }
}

void execute(const Config& c, Outputs& out) {
    Metadata meta(c.command);

    if (c.command == "distinguish" && !c.input.empty()) {
        const auto numbers = read_numbers(c.input);
        add_common(meta, c, nullptr);
        meta.add("source", "file");
        meta.add("input", c.input);
        meta.add("threshold", format_real(c.threshold));
        const DistinguisherRun run = distinguish_numbers(numbers, c.base, c.threshold);
        out.main << meta.line() << '\n';
        write_distinguisher_csv(out.main, run, "file");
        return;
    }

    if (c.command == "sieve") {
        const PrimeStore store = build_primes(c.count_or_default());
        save_cache(store, c.cache);
        add_common(meta, c, &store);
        meta.add("cache", c.cache);
        out.main << meta.line() << '\n'
                 << "N,max_prime,checksum\n"
                 << store.count() << ',' << store.max_prime() << ',' << hex(cache_checksum(store.primes())) << '\n';
        return;
    }

    const PrimeStore store = obtain_store(c);
    const Workbench bench(store, ExecutionOptions{c.threads});
    add_common(meta, c, &store);
    auto range = [&](std::uint64_t fallback) { return c.range_max.value_or(fallback); };

    if (c.command == "census") {
        const CensusResult census = full_census(store, c.base);
        out.main << meta.line() << '\n';
        write_census_csv(out.main, census);
    } else if (c.command == "sweep") {
        SourceSpec spec;
        spec.kind = c.source;
        spec.range_max = c.range_max;
        spec.bias_rate = c.rate;
        spec.prime_fraction = c.fraction;
        spec.base = c.base;
        meta.add("source", to_string(c.source));
        meta.add("draw", draw_domain(c.source));
        meta.add("m", range(store.max_prime()));
        if (c.source == SourceKind::BiasedRandomProducts) meta.add("rate", format_real(c.rate));
        if (c.source == SourceKind::Mixed) meta.add("fraction", format_real(c.fraction));
        meta.add("sizes", join_u64(c.sizes));
        meta.add("trials", c.trials);
        SweepResult sweep = run_parity_sweep(bench, c.sizes, c.trials, spec, c.base, c.seed);
        try {
            sweep.fit = fit_zscore_curve(sweep);
        } catch (const FitError& e) {
            sweep.fit_note = e.what();
        }
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
        emit_fit(c, meta, sweep, out);
    } else if (c.command == "distinguish") {
        SourceSpec spec;
        spec.kind = c.source;
        spec.range_max = c.range_max;
        meta.add("source", to_string(c.source));
        meta.add("draw", draw_domain(c.source));
        meta.add("m", range(store.max_prime()));
        meta.add("sample_size", c.sample_size);
        meta.add("trials", c.trials);
        meta.add("threshold", format_real(c.threshold));
        const DistinguisherRun run =
            distinguish(bench, spec, c.seed, c.base, DistinguisherConfig{c.sample_size, c.trials, c.threshold});
        out.main << meta.line() << '\n';
        write_distinguisher_csv(out.main, run, to_string(c.source));
    } else if (c.command == "products") {
        meta.add("source", to_string(SourceKind::PrimeProducts));
        meta.add("draw", draw_domain(SourceKind::PrimeProducts));
        meta.add("sizes", join_u64(c.sizes));
        meta.add("trials", c.trials);
        const SweepResult sweep = run_product_experiment(bench, c.sizes, c.trials, c.seed, c.base);
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
    } else if (c.command == "bias-sweep") {
        meta.add("source", to_string(SourceKind::BiasedRandomProducts));
        meta.add("draw", draw_domain(SourceKind::BiasedRandomProducts));
        meta.add("m", range(store.max_prime()));
        meta.add("rates", join_real(c.rates));
        meta.add("sample_size", c.sample_size);
        meta.add("trials", c.trials);
        const SweepResult sweep =
            run_bias_sweep(bench, c.rates, c.sample_size, c.trials, c.range_max, c.seed, c.base);
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
    } else if (c.command == "mixed") {
        meta.add("source", to_string(SourceKind::Mixed));
        meta.add("draw", draw_domain(SourceKind::Mixed));
        meta.add("m", range(store.max_prime()));
        meta.add("fractions", join_real(c.fractions));
        meta.add("sample_size", c.sample_size);
        meta.add("trials", c.trials);
        meta.add("fit_x", "percent");
        const SweepResult sweep =
            run_mixed_sweep(bench, c.sample_size, c.fractions, c.trials, c.range_max, c.seed, c.base);
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
        emit_fit(c, meta, sweep, out);
    } else if (c.command == "chebyshev") {
        meta.add("source", to_string(SourceKind::ChebyshevBalanced));
        meta.add("draw", draw_domain(SourceKind::ChebyshevBalanced));
        meta.add("sizes", join_u64(c.sizes));
        meta.add("trials", c.trials);
        const SweepResult sweep = run_chebyshev_experiment(bench, c.sizes, c.trials, c.seed, c.base);
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
    } else if (c.command == "modexp") {
        meta.add("pool", c.mod.prime_pool_size);
        meta.add("subset", c.mod.prime_subset);
        meta.add("randoms", c.mod.random_count);
        meta.add("draw", "divisors-uniform[2,m]");
        meta.add("m", c.mod.range_max.value_or(store.max_prime()));
        const TrialSummary summary = run_mod_experiment(bench, c.seed, c.mod, c.base);
        out.main << meta.line() << '\n';
        write_summary_csv(out.main, summary);
    } else if (c.command == "bases") {
        meta.add("source", to_string(SourceKind::Primes));
        meta.add("bases", join_u64(c.bases));
        meta.add("sample_size", c.sample_size);
        meta.add("trials", c.trials);
        const SweepResult sweep = run_base_sweep(bench, c.bases, c.sample_size, c.trials, c.seed);
        out.main << meta.line() << '\n';
        emit_sweep(c, sweep, out);
    }
}

// -- Parser -------------------------------------------------------------------------------

struct Parser {
    CLI::App app{"Digit-sum parity experiments on prime numbers.", "sodp"};
    RawOptions raw;

    Parser() {
        app.require_subcommand(1);
        app.set_help_all_flag("--help-all", "Show help for every subcommand");

        auto* sieve = command("sieve", "Build the first N primes and write them to the cache");
        common(sieve);

        auto* census = command("census", "Count even and odd digit sums over the whole store");
        common(census);

        auto* sweep = command("sweep", "Trial sweep over sample sizes for one source");
        common(sweep);
        source(sweep);
        sizes(sweep);
        trials(sweep, 1000);
        range(sweep);
        sweep->add_option("--rate", raw.rate, "Bias rate r for biased-products (default 0.5)");
        sweep->add_option("--fraction", raw.fraction, "Prime fraction x for mixed (default 0)");
        plot(sweep);
        fit(sweep);

        auto* dist = command("distinguish", "Decide whether a source or a number file looks like primes");
        common(dist);
        source(dist);
        dist->add_option("--input", raw.input, "File of numbers, one per line; tested as a single trial");
        sample_size(dist, "100000");
        trials(dist, 1000);
        range(dist);
        dist->add_option("--threshold", raw.threshold, "Verdict is Yes when z_avg exceeds this (default 5)");

        auto* products = command("products", "Sweep over products of two random primes");
        common(products);
        sizes(products);
        trials(products, 100);
        plot(products);

        auto* bias = command("bias-sweep", "Products of parity-biased random pools over bias rates");
        common(bias);
        bias->add_option("--rates", raw.rates, "Bias rates in [0.5, 1] (default 0.5,0.55,...,1)")->delimiter(',');
        sample_size(bias, "400000");
        trials(bias, 100);
        range(bias);
        plot(bias);

        auto* mixed = command("mixed", "Random numbers tainted with a fraction of primes");
        common(mixed);
        mixed->add_option("--fractions", raw.fractions, "Prime fractions in [0, 1] (default 0.1,...,0.9)")
            ->delimiter(',');
        sample_size(mixed, "300000");
        trials(mixed, 1000);
        range(mixed);
        plot(mixed);
        fit(mixed);

        auto* cheb = command("chebyshev", "Samples balanced between primes 1 and 3 mod 4");
        common(cheb);
        sizes(cheb);
        trials(cheb, 100);
        plot(cheb);

        auto* mod = command("modexp", "Digit parity of primes reduced modulo random divisors");
        common(mod);
        mod->add_option("--pool", raw.pool, "Choose primes among the first this many (default 1000)");
        mod->add_option("--subset", raw.subset, "Number of primes chosen (default 100)");
        mod->add_option("--randoms", raw.randoms, "Number of random divisors (default 1000000)");
        range(mod);

        auto* bases = command("bases", "Prime sweep across even bases");
        common(bases);
        bases->add_option("--bases", raw.bases, "Even bases (default 2,4,6,8,10,16)")->delimiter(',');
        sample_size(bases, "100000");
        trials(bases, 100);
        plot(bases);
    }

    CLI::App* command(const std::string& name, const std::string& description) {
        return app.add_subcommand(name, description);
    }

    void common(CLI::App* sub) {
        sub->add_option("--seed", raw.seed, "Run seed, decimal or 0x hex (default " + hex(kDefaultSeed) + ")");
        sub->add_option("--base", raw.base, "Digit base (default 10)");
        sub->add_option("--count", raw.count, "Number of primes N (default 50000000, or what the cache holds)");
        sub->add_option("--cache", raw.cache, "Prime cache file (default $SODP_CACHE_DIR/primes_<N>.sodp)");
        sub->add_option("-o,--output", raw.output, "Output file (default stdout)");
        sub->add_option("--threads", raw.threads, "Worker thread cap; never changes results");
    }
    void source(CLI::App* sub) {
        sub->add_option("--source", raw.source,
                        "primes, random-odd, random-all, products, biased-products, mixed or chebyshev");
    }
    void sizes(CLI::App* sub) {
        sub->add_option("--sizes", raw.sizes, "Sample sizes, increasing (default 1e5..1e6 by 1e5, 2e6..5e6)")
            ->delimiter(',');
    }
    void trials(CLI::App* sub, int fallback) {
        sub->add_option("--trials", raw.trials, "Trials per point (default " + std::to_string(fallback) + ")");
    }
    void sample_size(CLI::App* sub, const std::string& fallback) {
        sub->add_option("--sample-size", raw.sample_size, "Sample size per trial (default " + fallback + ")");
    }
    void range(CLI::App* sub) {
        sub->add_option("--range-max", raw.range_max, "Upper end m of random draws (default: largest prime)");
    }
    void plot(CLI::App* sub) { sub->add_option("--plot-data", raw.plot_data, "Also write the sweep table here"); }
    void fit(CLI::App* sub) {
        sub->add_option("--fit-output", raw.fit_output, "Write the fit here instead of after the table");
    }
};

}  // namespace

std::string default_cache_path(std::uint64_t count) {
    const char* dir = std::getenv("SODP_CACHE_DIR");
    if (dir == nullptr || *dir == '\0') return {};
    return (std::filesystem::path(dir) / ("primes_" + std::to_string(count) + ".sodp")).string();
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    Parser parser;
    std::string command;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        parser.app.parse(reversed);
        command = parser.app.get_subcommands().front()->get_name();
    } catch (const CLI::CallForHelp& e) {
        return parser.app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return parser.app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "sodp: " << e.what() << "\n\n" << parser.app.help();
        return kExitUsage;
    }

    Config config;
    try {
        config = resolve(command, parser.raw);
    } catch (const UsageError& e) {
        err << "sodp " << command << ": " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        Outputs outputs;
        execute(config, outputs);
        if (config.output.empty()) {
            out << outputs.main.str();
            out.flush();
        } else {
            write_file(config.output, outputs.main.str());
        }
        if (outputs.plot) write_file(config.plot_data, *outputs.plot);
        if (outputs.fit) write_file(config.fit_output, *outputs.fit);
    } catch (const std::exception& e) {
        err << "sodp " << command << ": " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace sodp::cli
