// experiments.hpp
// Parity census, trial sweeps, the distinguisher and the auxiliary studies.
//
// Seeding: trial i of any experiment uses trial_seed(seed, i), whatever the
// sweep point. Points of one sweep therefore share their trial streams, which
// has a few consequences worth knowing:
//
//   * for prefix-consistent sources (primes, random, products) the trial at
//     sample size s is the first s draws of the trial at any larger size, so a
//     sample-size sweep is one random walk per trial observed at checkpoints;
//   * the base sweep's base-10 point equals a parity sweep at (s, t, seed);
//   * distinguish() on Primes equals the parity sweep point at s = 10^5.
//
// Because the index is XORed in, seeds that differ only in their low bits
// reuse each other's trial streams: with 1000 trials, seeds 1, 2 and 3 all
// draw trials 0..999 in some order and so report the same averages.
// Independent repeated runs should take derive_seed(seed, run).
//
// Trials may run on several threads; results are gathered by trial index, so
// thread count never changes an output.

#pragma once

#include "sodp/digits.hpp"
#include "sodp/prime_store.hpp"
#include "sodp/sources.hpp"
#include "sodp/stats.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sodp {

inline constexpr std::uint64_t kDefaultSeed = 0xD16175C0DEULL;

/// 10^5 .. 10^6 in steps of 10^5, then 2..5 x 10^6.
std::vector<std::uint64_t> default_sample_sizes();

class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExecutionOptions {
    unsigned threads = 0;  ///< 0 = hardware concurrency
};

/// How many numbers have an even digit sum.
std::uint64_t count_even(std::span<const std::uint64_t> numbers, Base base);

/// Per-base lookup structures over one store, built lazily and shared.
class Workbench {
public:
    explicit Workbench(const PrimeStore& store, ExecutionOptions options = {});
    ~Workbench();

    Workbench(const Workbench&) = delete;
    Workbench& operator=(const Workbench&) = delete;

    const PrimeStore& store() const noexcept { return *store_; }
    unsigned threads() const noexcept { return threads_; }

    /// Bit i set iff store[i] has an even digit sum in `base`.
    const std::vector<std::uint64_t>& even_bits(Base base) const;

    const ResidueClasses& residue_classes() const;

    /// Even-parity bits indexed by position inside each residue class.
    struct ClassBits {
        std::vector<std::uint64_t> one_mod4;
        std::vector<std::uint64_t> three_mod4;
    };
    const ClassBits& class_even_bits(Base base) const;

private:
    struct Caches;
    const PrimeStore* store_;
    unsigned threads_;
    std::unique_ptr<Caches> caches_;
};

struct CensusResult {
    std::uint64_t prime_count = 0;
    Base base = kDecimal;
    std::uint64_t odd_count = 0;
    std::uint64_t even_count = 0;
};

CensusResult full_census(const PrimeStore& store, Base base);

enum class SweepAxis { SampleSize, BiasRate, PrimeFraction, Base };

const char* to_string(SweepAxis axis) noexcept;

struct SweepPoint {
    double axis_value = 0;
    TrialSummary summary;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::SampleSize;
    std::string source;  ///< recorded in output metadata
    std::vector<SweepPoint> points;
    std::optional<FitResult> fit;
    std::string fit_note;  ///< why no fit is attached, when one was wanted

    std::vector<double> axis_values() const;
    std::vector<double> z_scores() const;
};

/// Even counts of `trials` seeded trials of `spec` at one sample size.
/// This is the building block of every sweep.
std::vector<std::uint64_t> run_trials(const Workbench& bench, const SourceSpec& spec, std::uint64_t sample_size,
                                      std::uint64_t trials, Base base, std::uint64_t seed);

/// run_trials at several strictly increasing sizes; result is [size][trial].
/// Equal, size by size, to separate run_trials calls.
std::vector<std::vector<std::uint64_t>> run_trials_at(const Workbench& bench, const SourceSpec& spec,
                                                      std::span<const std::uint64_t> sample_sizes,
                                                      std::uint64_t trials, Base base, std::uint64_t seed);

SweepResult run_parity_sweep(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                             std::uint64_t trials, const SourceSpec& spec, Base base, std::uint64_t seed);

/// Quadratic-in-ln(s) model of z against sample size.
FitResult fit_zscore_curve(const SweepResult& sweep);

struct DistinguisherConfig {
    std::uint64_t sample_size = 100'000;
    std::uint64_t trials = 1000;
    double threshold = 5.0;
};

enum class Verdict { Yes, No };

struct DistinguisherRun {
    std::uint64_t sample_size = 0;
    std::uint64_t trials = 0;
    double threshold = 0;
    std::vector<std::uint64_t> per_trial_even;
    double p_avg = 0;
    double exp_avg = 0;
    double std_avg = 0;
    double z_avg = 0;
    Verdict verdict = Verdict::No;
};

const char* to_string(Verdict v) noexcept;

/// The parity distinguisher against a seeded source: Yes when z_avg exceeds
/// the threshold.
DistinguisherRun distinguish(const Workbench& bench, const SourceSpec& spec, std::uint64_t seed, Base base = kDecimal,
                             const DistinguisherConfig& config = {});

/// The distinguisher on a fixed set of numbers: the whole set is one trial.
DistinguisherRun distinguish_numbers(std::span<const std::uint64_t> numbers, Base base, double threshold = 5.0);

SweepResult run_product_experiment(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                                   std::uint64_t trials, std::uint64_t seed, Base base = kDecimal);

SweepResult run_bias_sweep(const Workbench& bench, std::span<const double> rates, std::uint64_t sample_size,
                           std::uint64_t trials, std::optional<std::uint64_t> range_max, std::uint64_t seed,
                           Base base = kDecimal);

/// Sweep over the prime fraction x with z ~ m * (100 x) + b attached; the fit
/// is in percent to match how the tainting results are usually quoted.
SweepResult run_mixed_sweep(const Workbench& bench, std::uint64_t sample_size, std::span<const double> fractions,
                            std::uint64_t trials, std::optional<std::uint64_t> range_max, std::uint64_t seed,
                            Base base = kDecimal);

SweepResult run_chebyshev_experiment(const Workbench& bench, std::span<const std::uint64_t> sample_sizes,
                                     std::uint64_t trials, std::uint64_t seed, Base base = kDecimal);

struct ModExperimentConfig {
    std::size_t prime_pool_size = 1000;
    std::size_t prime_subset = 100;
    std::size_t random_count = 1'000'000;
    std::optional<std::uint64_t> range_max;  ///< divisor range [2, m]; default is the largest stored prime
};

/// Parity of all subset x random residues p mod r, summarized as one trial.
TrialSummary run_mod_experiment(const Workbench& bench, std::uint64_t seed, const ModExperimentConfig& config = {},
                                Base base = kDecimal);

/// One Primes point per even base. Odd bases are rejected: there every odd
/// prime has an odd digit sum and the test is degenerate.
SweepResult run_base_sweep(const Workbench& bench, std::span<const std::uint64_t> bases, std::uint64_t sample_size,
                           std::uint64_t trials, std::uint64_t seed);

}  // namespace sodp
