#include "sodp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

namespace sodp {

namespace {

inline bool test_bit(const std::vector<std::uint64_t>& bits, std::uint64_t i) noexcept {
    return ((bits[i >> 6] >> (i & 63U)) & 1U) != 0;
}

// Runs `kernel(rng, out)` for every trial index. `out` receives one even count
// per requested sample size; the result is indexed [size][trial].
template <typename Kernel>
std::vector<std::vector<std::uint64_t>> parallel_trials(std::uint64_t trials, std::size_t sizes,
                                                        std::uint64_t seed, unsigned threads, const Kernel& kernel) {
    std::vector<std::uint64_t> flat(trials * sizes);
    auto run_one = [&](std::uint64_t i) {
        Xoshiro256ss rng(trial_seed(seed, i));
        kernel(rng, std::span<std::uint64_t>(flat.data() + i * sizes, sizes), i);
    };
    const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < trials; ++i) run_one(i);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                try {
                    for (std::uint64_t i = next++; i < trials; i = next++) run_one(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = trials;
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    std::vector<std::vector<std::uint64_t>> out(sizes, std::vector<std::uint64_t>(trials));
    for (std::uint64_t i = 0; i < trials; ++i) {
        for (std::size_t j = 0; j < sizes; ++j) out[j][i] = flat[i * sizes + j];
    }
    return out;
}

void require_increasing(std::span<const double> values, const char* what) {
    if (values.empty()) throw ExperimentError(std::string(what) + ": empty axis");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1])) throw ExperimentError(std::string(what) + ": axis must be strictly increasing");
    }
}

std::vector<double> as_doubles(std::span<const std::uint64_t> v) { return {v.begin(), v.end()}; }

void check_sample_sizes(std::span<const std::uint64_t> sizes, const char* what) {
    for (const std::uint64_t s : sizes) {
        if (s == 0) throw ExperimentError(std::string(what) + ": sample sizes must be positive");
    }
    require_increasing(as_doubles(sizes), what);
}

std::vector<std::uint64_t> build_even_bits(std::span<const std::uint64_t> values, Base base) {
    std::vector<std::uint64_t> bits((values.size() + 63) / 64, 0);
    with_parity_kernel(base, [&](auto parity) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (parity.is_even(values[i])) bits[i >> 6] |= std::uint64_t{1} << (i & 63U);
        }
    });
    return bits;
}

SweepResult sample_size_sweep(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                              std::uint64_t trials, const SourceSpec& spec, Base base, std::uint64_t seed,
                              const char* what) {
    check_sample_sizes(sample_sizes, what);
    SweepResult out;
    out.axis = SweepAxis::SampleSize;
    out.source = to_string(spec.kind);
    const auto counts = run_trials_at(bench, spec, sample_sizes, trials, base, seed);
    for (std::size_t j = 0; j < sample_sizes.size(); ++j) {
        out.points.push_back({static_cast<double>(sample_sizes[j]), summarize_trials(counts[j], sample_sizes[j])});
    }
    return out;
}

}  // namespace

std::vector<std::uint64_t> default_sample_sizes() {
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = 100'000; s <= 1'000'000; s += 100'000) out.push_back(s);
    for (std::uint64_t s = 2'000'000; s <= 5'000'000; s += 1'000'000) out.push_back(s);
    return out;
}

std::uint64_t count_even(std::span<const std::uint64_t> numbers, Base base) {
    return with_parity_kernel(base, [&](auto parity) {
        std::uint64_t even = 0;
        for (const std::uint64_t n : numbers) even += parity.is_even(n) ? 1 : 0;
        return even;
    });
}

// -- Workbench ----------------------------------------------------------------

struct Workbench::Caches {
    std::mutex mutex;
    std::map<std::uint64_t, std::unique_ptr<const std::vector<std::uint64_t>>> even_bits;
    std::unique_ptr<const ResidueClasses> classes;
    std::map<std::uint64_t, std::unique_ptr<const ClassBits>> class_bits;
};

Workbench::Workbench(const PrimeStore& store, ExecutionOptions options)
    : store_(&store),
      threads_(options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency())),
      caches_(std::make_unique<Caches>()) {}

Workbench::~Workbench() = default;

const std::vector<std::uint64_t>& Workbench::even_bits(Base base) const {
    std::lock_guard lock(caches_->mutex);
    auto& slot = caches_->even_bits[base.value()];
    if (!slot) slot = std::make_unique<const std::vector<std::uint64_t>>(build_even_bits(store_->primes(), base));
    return *slot;
}

const ResidueClasses& Workbench::residue_classes() const {
    std::lock_guard lock(caches_->mutex);
    if (!caches_->classes) caches_->classes = std::make_unique<const ResidueClasses>(ResidueClasses::of(*store_));
    return *caches_->classes;
}

const Workbench::ClassBits& Workbench::class_even_bits(Base base) const {
    const ResidueClasses& classes = residue_classes();
    std::lock_guard lock(caches_->mutex);
    auto& slot = caches_->class_bits[base.value()];
    if (!slot) {
        auto gather = [&](const std::vector<std::uint32_t>& idx) {
            std::vector<std::uint64_t> values(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) values[i] = (*store_)[idx[i]];
            return build_even_bits(values, base);
        };
        slot = std::make_unique<const ClassBits>(ClassBits{gather(classes.one_mod4), gather(classes.three_mod4)});
    }
    return *slot;
}

// -- Census ---------------------------------------------------------------------

CensusResult full_census(const PrimeStore& store, Base base) {
    CensusResult out;
    out.prime_count = store.count();
    out.base = base;
    out.even_count = count_even(store.primes(), base);
    out.odd_count = store.count() - out.even_count;
    return out;
}

const char* to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::SampleSize: return "sample_size";
        case SweepAxis::BiasRate: return "bias_rate";
        case SweepAxis::PrimeFraction: return "prime_fraction";
        case SweepAxis::Base: return "base";
    }
    return "unknown";
}

std::vector<double> SweepResult::axis_values() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.axis_value);
    return out;
}

std::vector<double> SweepResult::z_scores() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.summary.z_score);
    return out;
}

// -- Trials -----------------------------------------------------------------------

// Each kernel consumes its generator exactly like the matching draw_* function
// in sources, but only counts parities instead of materializing numbers.
//
// Primes, random and product draws are prefix-consistent: the first s numbers
// of a trial do not depend on how many more follow. Those kernels walk one
// stream per trial and record the running count at every requested size. The
// other sources restart the trial stream for each size.
std::vector<std::vector<std::uint64_t>> run_trials_at(const Workbench& bench, const SourceSpec& spec,
                                                      std::span<const std::uint64_t> sample_sizes,
                                                      std::uint64_t trials, Base base, std::uint64_t seed) {
    spec.validate();
    check_sample_sizes(sample_sizes, "trials");
    if (trials == 0) throw ExperimentError("need at least one trial");

    const PrimeStore& store = bench.store();
    const std::uint64_t population = spec.population(store);
    const std::uint64_t m = spec.resolved_range_max(store);
    const unsigned threads = bench.threads();
    const std::size_t k = sample_sizes.size();

    // Runs `body(rng, s)` once per size with a fresh trial stream each time.
    auto restarting = [&](auto body) {
        return parallel_trials(trials, k, seed, threads, [&](Xoshiro256ss& rng, std::span<std::uint64_t> out, std::uint64_t i) {
            for (std::size_t j = 0; j < k; ++j) {
                if (j > 0) rng = Xoshiro256ss(trial_seed(seed, i));
                out[j] = body(rng, sample_sizes[j]);
            }
        });
    };
    // Runs `step(rng, from, to, even)` over consecutive stretches of one stream.
    auto prefix = [&](auto step) {
        return parallel_trials(trials, k, seed, threads, [&](Xoshiro256ss& rng, std::span<std::uint64_t> out, std::uint64_t) {
            std::uint64_t even = 0;
            std::uint64_t done = 0;
            for (std::size_t j = 0; j < k; ++j) {
                even += step(rng, sample_sizes[j] - done);
                done = sample_sizes[j];
                out[j] = even;
            }
        });
    };

    return with_parity_kernel(base, [&](auto parity) -> std::vector<std::vector<std::uint64_t>> {
        switch (spec.kind) {
            case SourceKind::Primes: {
                const auto& bits = bench.even_bits(base);
                return prefix([&](Xoshiro256ss& rng, std::uint64_t n) {
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < n; ++i) even += test_bit(bits, rng.uniform_below(population));
                    return even;
                });
            }
            case SourceKind::RandomOdd: {
                if (m < 3) throw SourceError("random odd draws need m >= 3");
                const std::uint64_t odd_values = (m - 1) / 2;
                return prefix([&](Xoshiro256ss& rng, std::uint64_t n) {
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < n; ++i) even += parity.is_even(3 + 2 * rng.uniform_below(odd_values));
                    return even;
                });
            }
            case SourceKind::RandomAll: {
                if (m < 2) throw SourceError("random draws need m >= 2");
                return prefix([&](Xoshiro256ss& rng, std::uint64_t n) {
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < n; ++i) even += parity.is_even(rng.uniform_between(2, m));
                    return even;
                });
            }
            case SourceKind::PrimeProducts: {
                const std::uint64_t top = store[population - 1];
                std::uint64_t ignored = 0;
                if (__builtin_mul_overflow(top, top, &ignored)) throw SourceError("prime products overflow 64 bits");
                const std::uint64_t* primes = store.primes().data();
                return prefix([&](Xoshiro256ss& rng, std::uint64_t n) {
                    // Index pairs are drawn in the same order as draw_prime_products;
                    // batching only lets the loads overlap.
                    constexpr std::uint64_t kBatch = 64;
                    std::uint64_t left[kBatch];
                    std::uint64_t right[kBatch];
                    std::uint64_t even = 0;
                    for (std::uint64_t done = 0; done < n; done += kBatch) {
                        const std::uint64_t b = std::min(kBatch, n - done);
                        for (std::uint64_t j = 0; j < b; ++j) {
                            left[j] = rng.uniform_below(population);
                            right[j] = rng.uniform_below(population);
                            __builtin_prefetch(primes + left[j]);
                            __builtin_prefetch(primes + right[j]);
                        }
                        for (std::uint64_t j = 0; j < b; ++j) even += parity.is_even(primes[left[j]] * primes[right[j]]);
                    }
                    return even;
                });
            }
            case SourceKind::BiasedRandomProducts: {
                if (m > 0xffffffffULL) throw SourceError("range_max must be < 2^32 so products fit in 64 bits");
                return restarting([&](Xoshiro256ss& rng, std::uint64_t s) {
                    const auto pool = build_biased_pool(spec.bias_rate, s, m, base, rng);
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < s; ++i) {
                        const std::uint64_t a = pool[rng.uniform_below(pool.size())];
                        const std::uint64_t b = pool[rng.uniform_below(pool.size())];
                        even += parity.is_even(a * b);
                    }
                    return even;
                });
            }
            case SourceKind::Mixed: {
                if (m < 2) throw SourceError("mixed draws need m >= 2");
                const auto& bits = bench.even_bits(base);
                return restarting([&](Xoshiro256ss& rng, std::uint64_t s) {
                    const std::uint64_t random_count = floor_count((1.0L - spec.prime_fraction) * s);
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < random_count; ++i) even += parity.is_even(rng.uniform_between(2, m));
                    for (std::uint64_t i = random_count; i < s; ++i) even += test_bit(bits, rng.uniform_below(population));
                    return even;
                });
            }
            case SourceKind::ChebyshevBalanced: {
                if (spec.prime_count && *spec.prime_count != store.count()) {
                    throw ExperimentError("Chebyshev-balanced trials use the whole store as population");
                }
                const ResidueClasses& classes = bench.residue_classes();
                const auto& bits = bench.class_even_bits(base);
                const std::uint64_t ones = classes.one_mod4.size();
                const std::uint64_t threes = classes.three_mod4.size();
                for (const std::uint64_t s : sample_sizes) {
                    if (s % 2 != 0) throw SourceError("Chebyshev-balanced samples need an even size");
                    if (ones < s / 2 || threes < s / 2) {
                        throw SourceError("not enough primes in a residue class mod 4 for a sample of " + std::to_string(s));
                    }
                }
                return restarting([&](Xoshiro256ss& rng, std::uint64_t s) {
                    // The shuffle that draw_chebyshev_balanced applies afterwards
                    // cannot change a count, so it is skipped here.
                    const std::uint64_t half = s / 2;
                    std::uint64_t even = 0;
                    for (std::uint64_t i = 0; i < half; ++i) even += test_bit(bits.one_mod4, rng.uniform_below(ones));
                    for (std::uint64_t i = 0; i < half; ++i) even += test_bit(bits.three_mod4, rng.uniform_below(threes));
                    return even;
                });
            }
        }
        throw ExperimentError("unknown source kind");
    });
}

std::vector<std::uint64_t> run_trials(const Workbench& bench, const SourceSpec& spec, std::uint64_t sample_size,
                                      std::uint64_t trials, Base base, std::uint64_t seed) {
    if (sample_size == 0) throw ExperimentError("sample size must be positive");
    const std::uint64_t sizes[] = {sample_size};
    return std::move(run_trials_at(bench, spec, sizes, trials, base, seed).front());
}

// -- Sweeps -----------------------------------------------------------------------

SweepResult run_parity_sweep(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                             std::uint64_t trials, const SourceSpec& spec, Base base, std::uint64_t seed) {
    return sample_size_sweep(bench, sample_sizes, trials, spec, base, seed, "parity sweep");
}

FitResult fit_zscore_curve(const SweepResult& sweep) {
    if (sweep.axis != SweepAxis::SampleSize) throw FitError("z-score curve needs a sample-size sweep");
    std::vector<Point> pts;
    for (const auto& p : sweep.points) pts.push_back({p.axis_value, p.summary.z_score});
    return quadratic_fit_lnx(pts);
}

const char* to_string(Verdict v) noexcept { return v == Verdict::Yes ? "Yes" : "No"; }

namespace {

DistinguisherRun make_run(std::vector<std::uint64_t> counts, std::uint64_t sample_size, double threshold) {
    const TrialSummary summary = summarize_trials(counts, sample_size);
    DistinguisherRun run;
    run.sample_size = sample_size;
    run.trials = counts.size();
    run.threshold = threshold;
    run.per_trial_even = std::move(counts);
    run.p_avg = summary.avg_even;
    run.exp_avg = summary.expectation;
    run.std_avg = summary.std_dev;
    run.z_avg = summary.z_score;
    run.verdict = run.z_avg > threshold ? Verdict::Yes : Verdict::No;
    return run;
}

}  // namespace

DistinguisherRun distinguish(const Workbench& bench, const SourceSpec& spec, std::uint64_t seed, Base base,
                             const DistinguisherConfig& config) {
    auto counts = run_trials(bench, spec, config.sample_size, config.trials, base, seed);
    return make_run(std::move(counts), config.sample_size, config.threshold);
}

DistinguisherRun distinguish_numbers(std::span<const std::uint64_t> numbers, Base base, double threshold) {
    if (numbers.empty()) throw ExperimentError("distinguish: empty number set");
    return make_run({count_even(numbers, base)}, numbers.size(), threshold);
}

SweepResult run_product_experiment(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                                   std::uint64_t trials, std::uint64_t seed, Base base) {
    SourceSpec spec;
    spec.kind = SourceKind::PrimeProducts;
    return sample_size_sweep(bench, sample_sizes, trials, spec, base, seed, "product experiment");
}

SweepResult run_bias_sweep(const Workbench& bench, std::span<const double> rates, std::uint64_t sample_size,
                           std::uint64_t trials, std::optional<std::uint64_t> range_max, std::uint64_t seed,
                           Base base) {
    require_increasing(rates, "bias sweep");
    SourceSpec spec;
    spec.kind = SourceKind::BiasedRandomProducts;
    spec.range_max = range_max;
    spec.base = base;
    SweepResult out;
    out.axis = SweepAxis::BiasRate;
    out.source = to_string(spec.kind);
    for (const double r : rates) {
        spec.bias_rate = r;
        spec.validate();
        const auto counts = run_trials(bench, spec, sample_size, trials, base, seed);
        out.points.push_back({r, summarize_trials(counts, sample_size)});
    }
    return out;
}

SweepResult run_mixed_sweep(const Workbench& bench, std::uint64_t sample_size, std::span<const double> fractions,
                            std::uint64_t trials, std::optional<std::uint64_t> range_max, std::uint64_t seed,
                            Base base) {
    require_increasing(fractions, "mixed sweep");
    SourceSpec spec;
    spec.kind = SourceKind::Mixed;
    spec.range_max = range_max;
    SweepResult out;
    out.axis = SweepAxis::PrimeFraction;
    out.source = to_string(spec.kind);
    for (const double x : fractions) {
        spec.prime_fraction = x;
        spec.validate();
        const auto counts = run_trials(bench, spec, sample_size, trials, base, seed);
        out.points.push_back({x, summarize_trials(counts, sample_size)});
    }
    std::vector<Point> pts;
    for (const auto& p : out.points) pts.push_back({100 * p.axis_value, p.summary.z_score});
    try {
        out.fit = linear_fit(pts);
    } catch (const FitError& e) {
        out.fit_note = e.what();
    }
    return out;
}

SweepResult run_chebyshev_experiment(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                                     std::uint64_t trials, std::uint64_t seed, Base base) {
    for (const std::uint64_t s : sample_sizes) {
        if (s % 2 != 0) throw ExperimentError("Chebyshev experiment needs even sample sizes");
    }
    SourceSpec spec;
    spec.kind = SourceKind::ChebyshevBalanced;
    return sample_size_sweep(bench, sample_sizes, trials, spec, base, seed, "chebyshev experiment");
}

TrialSummary run_mod_experiment(const Workbench& bench, std::uint64_t seed, const ModExperimentConfig& config,
                                Base base) {
    const PrimeStore& store = bench.store();
    if (store.count() < config.prime_pool_size) {
        throw ExperimentError("mod experiment needs at least " + std::to_string(config.prime_pool_size) + " primes");
    }
    const std::uint64_t total = static_cast<std::uint64_t>(config.prime_subset) * config.random_count;
    if (total == 0) throw ExperimentError("mod experiment needs a nonempty prime subset and divisor set");
    Xoshiro256ss rng(trial_seed(seed, 0));
    const auto plan = plan_mod_pairs(store, config.prime_pool_size, config.prime_subset, config.random_count,
                                     config.range_max.value_or(store.max_prime()), rng);
    const std::uint64_t even = with_parity_kernel(base, [&](auto parity) {
        std::uint64_t n = 0;
        plan.for_each_residue([&](std::uint64_t v) { n += parity.is_even(v) ? 1 : 0; });
        return n;
    });
    return summarize_total(even, total, 1);
}

SweepResult run_base_sweep(const Workbench& bench, std::span<const std::uint64_t> bases, std::uint64_t sample_size,
                           std::uint64_t trials, std::uint64_t seed) {
    for (const std::uint64_t b : bases) {
        if (b < 2) throw ExperimentError("base must be >= 2");
        if (b % 2 != 0) {
            throw ExperimentError("base " + std::to_string(b) +
                                  " is odd: every odd prime has an odd digit sum there, so the test is degenerate");
        }
    }
    require_increasing(as_doubles(bases), "base sweep");
    SourceSpec spec;
    spec.kind = SourceKind::Primes;
    SweepResult out;
    out.axis = SweepAxis::Base;
    out.source = to_string(spec.kind);
    for (const std::uint64_t b : bases) {
        const auto counts = run_trials(bench, spec, sample_size, trials, Base(b), seed);
        out.points.push_back({static_cast<double>(b), summarize_trials(counts, sample_size)});
    }
    return out;
}

}  // namespace sodp
