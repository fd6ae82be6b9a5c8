// stats.hpp
// Null-model statistics for digit-parity counts and the regressions run on them.
//
// Under the null hypothesis a sample of size s has Binomial(s, 1/2) even
// digit sums. Averaging t independent trials gives
//
//     E[avg] = s/2,    Var[avg] = s/(4t).
//
// The z-score is the distance of the observed average from s/2 in units of
// that standard deviation; Chebyshev turns it into min(1, 1/z^2).

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sodp {

struct TrialSummary {
    std::uint64_t sample_size = 0;
    std::uint64_t trials = 0;
    std::uint64_t even_total = 0;  ///< exact sum of the per-trial even counts
    double avg_even = 0;
    double expectation = 0;
    double std_dev = 0;
    double z_score = 0;   ///< |avg_even - expectation| / std_dev
    double z_signed = 0;  ///< positive when evens are over-represented
    double chebyshev_bound = 1;
};

/// Throws std::invalid_argument on empty input, s == 0 or a count above s.
TrialSummary summarize_trials(std::span<const std::uint64_t> even_counts, std::uint64_t sample_size);

/// Same statistics from an already accumulated total over `trials` trials.
TrialSummary summarize_total(std::uint64_t even_total, std::uint64_t sample_size, std::uint64_t trials);

double chebyshev_bound(double z);

// -- Distributions ------------------------------------------------------------

/// P[X = k] for X ~ Binomial(n, p), via Loader's saddle-point expansion.
double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

/// P[X <= k]. k < 0 gives 0, k >= n gives 1.
double binomial_cdf(std::int64_t k, std::uint64_t n, double p);

/// P[X > k], computed directly so far upper tails keep their precision.
double binomial_sf(std::int64_t k, std::uint64_t n, double p);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double regularized_beta(double x, double a, double b);

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
double students_t_two_sided_p(double t, double df);

// -- Regression ---------------------------------------------------------------

struct Point {
    double x = 0;
    double y = 0;
};

enum class FitKind { Linear, QuadraticInLnX };

const char* to_string(FitKind kind) noexcept;

struct FitResult {
    FitKind kind = FitKind::Linear;
    // y = c2*u^2 + c1*u + c0, with u = x (Linear, c2 = 0) or u = ln x.
    double c2 = 0;
    double c1 = 0;
    double c0 = 0;
    double r_squared = 0;  ///< NaN for QuadraticInLnX
    double p_value = 0;    ///< slope != 0 t-test; NaN for QuadraticInLnX
    double sse = 0;
    std::size_t points = 0;

    double slope() const noexcept { return c1; }
    double intercept() const noexcept { return c0; }
    double predict(double x) const;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordinary least squares y = m x + b. Needs >= 3 points with x variance.
FitResult linear_fit(std::span<const Point> points);

/// Least squares over {ln^2 x, ln x, 1}. Needs >= 4 points, x > 0, distinct x.
FitResult quadratic_fit_lnx(std::span<const Point> points);

/// Spearman rank correlation, ties given their average rank.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

}  // namespace sodp
