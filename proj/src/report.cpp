#include "sodp/report.hpp"

#include <charconv>
#include <cmath>

namespace sodp {

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_census_csv(std::ostream& out, const CensusResult& census) {
    out << kCensusHeader << '\n'
        << census.prime_count << ',' << census.base.value() << ',' << census.odd_count << ',' << census.even_count
        << '\n';
}

namespace {

void write_summary_fields(std::ostream& out, const TrialSummary& s) {
    out << s.sample_size << ',' << s.trials << ',' << format_real(s.avg_even) << ',' << format_real(s.expectation)
        << ',' << format_real(s.std_dev) << ',' << format_real(s.z_score) << ',' << format_real(s.z_signed) << ','
        << format_real(s.chebyshev_bound) << '\n';
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << kSweepHeader << '\n';
    for (const auto& p : sweep.points) {
        out << to_string(sweep.axis) << ',' << format_real(p.axis_value) << ',';
        write_summary_fields(out, p.summary);
    }
}

void write_summary_csv(std::ostream& out, const TrialSummary& summary) {
    out << kSummaryHeader << '\n';
    write_summary_fields(out, summary);
}

void write_fit_csv(std::ostream& out, const FitResult& fit) {
    out << kFitHeader << '\n'
        << to_string(fit.kind) << ',' << format_real(fit.c2) << ',' << format_real(fit.c1) << ','
        << format_real(fit.c0) << ',' << format_real(fit.r_squared) << ',' << format_real(fit.p_value) << ','
        << format_real(fit.sse) << '\n';
}

void write_distinguisher_csv(std::ostream& out, const DistinguisherRun& run, std::string_view source) {
    out << kDistinguishHeader << '\n'
        << source << ',' << run.sample_size << ',' << run.trials << ',' << format_real(run.threshold) << ','
        << format_real(run.p_avg) << ',' << format_real(run.exp_avg) << ',' << format_real(run.std_avg) << ','
        << format_real(run.z_avg) << ',' << to_string(run.verdict) << '\n';
}

}  // namespace sodp
