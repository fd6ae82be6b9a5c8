#include "sodp/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace sodp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(n!) - log(sqrt(2 pi n) (n/e)^n), the Stirling remainder.
double stirlerr(double n) {
    constexpr double s0 = 1.0 / 12;
    constexpr double s1 = 1.0 / 360;
    constexpr double s2 = 1.0 / 1260;
    constexpr double s3 = 1.0 / 1680;
    constexpr double s4 = 1.0 / 1188;
    if (n <= 15) {
        const long double ln = n;
        const long double v = std::lgamma(ln + 1) - (ln + 0.5L) * std::log(ln) + ln -
                              0.5L * std::log(2 * std::numbers::pi_v<long double>);
        return static_cast<double>(v);
    }
    const double nn = n * n;
    if (n > 500) return (s0 - s1 / nn) / n;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x/np) + np - x without cancellation when x is close to np.
double bd0(double x, double np) {
    if (std::abs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

double pmf_raw(double x, double n, double p, double q) {
    if (p == 0) return x == 0 ? 1 : 0;
    if (q == 0) return x == n ? 1 : 0;
    if (x == 0) {
        const double lc = p < 0.1 ? -bd0(n, n * q) - n * p : n * std::log(q);
        return std::exp(lc);
    }
    if (x == n) {
        const double lc = q < 0.1 ? -bd0(n, n * p) - n * q : n * std::log(p);
        return std::exp(lc);
    }
    const double lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    const double lf = std::log(2 * std::numbers::pi) + std::log(x) + std::log1p(-x / n);
    return std::exp(lc - 0.5 * lf);
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
// Converges quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b;
    const double qap = a + 1;
    const double qam = a - 1;
    double c = 1;
    double d = 1 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1 / d;
    double h = d;
    const auto max_iter = static_cast<long>(1000 + 50 * std::sqrt(qab));
    for (long m = 1; m <= max_iter; ++m) {
        const double dm = static_cast<double>(m);
        const double m2 = 2 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < eps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// P[X >= j] for X ~ Binomial(n, p), 1 <= j <= n, evaluated as I_p(j, n-j+1)
// when the continued fraction is in its fast region; otherwise through the
// mirrored lower tail of n - X ~ Binomial(n, q).
double upper_tail(std::uint64_t j, std::uint64_t n, double p, double q, bool& complemented) {
    const double a = static_cast<double>(j);
    const double b = static_cast<double>(n - j + 1);
    if (p < (a + 1) / (a + b + 2)) {
        complemented = false;
        return pmf_raw(a, static_cast<double>(n), p, q) * q * beta_continued_fraction(a, b, p);
    }
    // P[X >= j] = 1 - P[X <= j-1] = 1 - P[n-X >= n-j+1]
    complemented = true;
    const std::uint64_t jm = n - j + 1;
    const double am = static_cast<double>(jm);
    const double bm = static_cast<double>(n - jm + 1);
    return pmf_raw(am, static_cast<double>(n), q, p) * p * beta_continued_fraction(am, bm, q);
}

void check_probability(double p) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("probability must lie in [0, 1]");
}

}  // namespace

TrialSummary summarize_total(std::uint64_t even_total, std::uint64_t sample_size, std::uint64_t trials) {
    if (sample_size == 0) throw std::invalid_argument("sample size must be positive");
    if (trials == 0) throw std::invalid_argument("need at least one trial");
    TrialSummary out;
    out.sample_size = sample_size;
    out.trials = trials;
    out.even_total = even_total;
    const double s = static_cast<double>(sample_size);
    const double t = static_cast<double>(trials);
    out.avg_even = static_cast<double>(even_total) / t;
    out.expectation = s / 2;
    out.std_dev = std::sqrt(s / (4 * t));
    out.z_signed = (out.avg_even - out.expectation) / out.std_dev;
    out.z_score = std::abs(out.z_signed);
    out.chebyshev_bound = chebyshev_bound(out.z_score);
    return out;
}

TrialSummary summarize_trials(std::span<const std::uint64_t> even_counts, std::uint64_t sample_size) {
    if (even_counts.empty()) throw std::invalid_argument("summarize_trials: no trials");
    std::uint64_t total = 0;
    for (const std::uint64_t c : even_counts) {
        if (c > sample_size) throw std::invalid_argument("summarize_trials: even count exceeds sample size");
        total += c;
    }
    return summarize_total(total, sample_size, even_counts.size());
}

double chebyshev_bound(double z) {
    if (!(z >= 0)) throw std::invalid_argument("chebyshev_bound: z must be >= 0");
    if (z <= 1) return 1;
    return std::min(1.0, 1 / (z * z));
}

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
    check_probability(p);
    if (k > n) return 0;
    return pmf_raw(static_cast<double>(k), static_cast<double>(n), p, 1 - p);
}

double binomial_sf(std::int64_t k, std::uint64_t n, double p) {
    check_probability(p);
    if (k < 0) return 1;
    if (static_cast<std::uint64_t>(k) >= n) return 0;
    if (p == 0) return 0;
    if (p == 1) return 1;
    bool complemented = false;
    const double v = upper_tail(static_cast<std::uint64_t>(k) + 1, n, p, 1 - p, complemented);
    return complemented ? 1 - v : v;
}

double binomial_cdf(std::int64_t k, std::uint64_t n, double p) {
    check_probability(p);
    if (k < 0) return 0;
    if (static_cast<std::uint64_t>(k) >= n) return 1;
    if (p == 0) return 1;
    if (p == 1) return 0;
    bool complemented = false;
    const double v = upper_tail(static_cast<std::uint64_t>(k) + 1, n, p, 1 - p, complemented);
    return complemented ? v : 1 - v;
}

double regularized_beta(double x, double a, double b) {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("regularized_beta: a and b must be positive");
    if (!(x >= 0 && x <= 1)) throw std::invalid_argument("regularized_beta: x must lie in [0, 1]");
    if (x == 0) return 0;
    if (x == 1) return 1;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1) / (a + b + 2)) return front * beta_continued_fraction(a, b, x) / a;
    return 1 - front * beta_continued_fraction(b, a, 1 - x) / b;
}

double students_t_two_sided_p(double t, double df) {
    if (!(df > 0)) throw std::invalid_argument("students_t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0;
    return regularized_beta(df / (df + t * t), df / 2, 0.5);
}

const char* to_string(FitKind kind) noexcept {
    return kind == FitKind::Linear ? "linear" : "quadratic_lnx";
}

double FitResult::predict(double x) const {
    const double u = kind == FitKind::Linear ? x : std::log(x);
    return (c2 * u + c1) * u + c0;
}

FitResult linear_fit(std::span<const Point> points) {
    if (points.size() < 3) throw FitError("linear_fit: need at least 3 points");
    const double n = static_cast<double>(points.size());
    double mx = 0;
    double my = 0;
    for (const auto& pt : points) {
        mx += pt.x;
        my += pt.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0;
    double sxy = 0;
    double syy = 0;
    for (const auto& pt : points) {
        sxx += (pt.x - mx) * (pt.x - mx);
        sxy += (pt.x - mx) * (pt.y - my);
        syy += (pt.y - my) * (pt.y - my);
    }
    if (!(sxx > 0)) throw FitError("linear_fit: x values have no variance");

    FitResult fit;
    fit.kind = FitKind::Linear;
    fit.points = points.size();
    fit.c1 = sxy / sxx;
    fit.c0 = my - fit.c1 * mx;
    for (const auto& pt : points) {
        const double r = pt.y - (fit.c1 * pt.x + fit.c0);
        fit.sse += r * r;
    }
    fit.r_squared = syy > 0 ? std::clamp(1 - fit.sse / syy, 0.0, 1.0) : 1.0;

    const double df = n - 2;
    if (fit.sse == 0) {
        fit.p_value = fit.c1 == 0 ? 1.0 : 0.0;
    } else {
        const double se = std::sqrt(fit.sse / df / sxx);
        fit.p_value = students_t_two_sided_p(fit.c1 / se, df);
    }
    return fit;
}

FitResult quadratic_fit_lnx(std::span<const Point> points) {
    if (points.size() < 4) throw FitError("quadratic_fit_lnx: need at least 4 points");
    const std::size_t n = points.size();
    std::vector<double> xs;
    xs.reserve(n);
    for (const auto& pt : points) {
        if (!(pt.x > 0)) throw FitError("quadratic_fit_lnx: x must be positive");
        xs.push_back(pt.x);
    }
    std::sort(xs.begin(), xs.end());
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
        throw FitError("quadratic_fit_lnx: x values must be distinct");
    }

    // Householder QR of the n x 3 design [u^2, u, 1], applied to y in place.
    std::vector<std::array<double, 3>> a(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::log(points[i].x);
        a[i] = {u * u, u, 1.0};
        y[i] = points[i].y;
    }
    std::array<double, 3> diag{};
    for (std::size_t k = 0; k < 3; ++k) {
        double norm = 0;
        for (std::size_t i = k; i < n; ++i) norm += a[i][k] * a[i][k];
        norm = std::sqrt(norm);
        if (norm == 0) throw FitError("quadratic_fit_lnx: singular design matrix");
        const double alpha = a[k][k] > 0 ? -norm : norm;
        // v = x - alpha e1, stored in column k
        a[k][k] -= alpha;
        double vnorm2 = 0;
        for (std::size_t i = k; i < n; ++i) vnorm2 += a[i][k] * a[i][k];
        for (std::size_t j = k + 1; j < 3; ++j) {
            double dot = 0;
            for (std::size_t i = k; i < n; ++i) dot += a[i][k] * a[i][j];
            const double f = 2 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) a[i][j] -= f * a[i][k];
        }
        double dot = 0;
        for (std::size_t i = k; i < n; ++i) dot += a[i][k] * y[i];
        const double f = 2 * dot / vnorm2;
        for (std::size_t i = k; i < n; ++i) y[i] -= f * a[i][k];
        diag[k] = alpha;
    }
    const double scale = std::max({std::abs(diag[0]), std::abs(diag[1]), std::abs(diag[2])});
    for (const double d : diag) {
        if (std::abs(d) <= 1e-13 * scale) throw FitError("quadratic_fit_lnx: rank-deficient design matrix");
    }
    // Back substitution on R (diag on the diagonal, a[i][j] above it).
    std::array<double, 3> coef{};
    for (std::size_t k = 3; k-- > 0;) {
        double acc = y[k];
        for (std::size_t j = k + 1; j < 3; ++j) acc -= a[k][j] * coef[j];
        coef[k] = acc / diag[k];
    }

    FitResult fit;
    fit.kind = FitKind::QuadraticInLnX;
    fit.points = n;
    fit.c2 = coef[0];
    fit.c1 = coef[1];
    fit.c0 = coef[2];
    fit.r_squared = kNaN;
    fit.p_value = kNaN;
    for (const auto& pt : points) {
        const double r = pt.y - fit.predict(pt.x);
        fit.sse += r * r;
    }
    return fit;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw std::invalid_argument("spearman_rho: need two equal-length samples of size >= 2");
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mean = (n + 1) / 2;
    double sxy = 0;
    double sxx = 0;
    double syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace sodp
