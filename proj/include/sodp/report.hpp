// report.hpp
// CSV emission. Column order is fixed; reals use 17 significant digits, '.'
// as decimal separator and LF line endings regardless of locale.
//
//   census : N,base,odd_count,even_count
//   sweep  : axis,axis_value,sample_size,trials,avg_even,expectation,std_dev,z_score,z_signed,chebyshev_bound
//   fit    : kind,c2,c1,c0,r_squared,p_value,sse
//   summary: the sweep columns after axis,axis_value (one trial summary)

#pragma once

#include "sodp/experiments.hpp"

#include <ostream>
#include <string>
#include <string_view>

namespace sodp {

inline constexpr std::string_view kCensusHeader = "N,base,odd_count,even_count";
inline constexpr std::string_view kSweepHeader =
    "axis,axis_value,sample_size,trials,avg_even,expectation,std_dev,z_score,z_signed,chebyshev_bound";
inline constexpr std::string_view kFitHeader = "kind,c2,c1,c0,r_squared,p_value,sse";
inline constexpr std::string_view kSummaryHeader =
    "sample_size,trials,avg_even,expectation,std_dev,z_score,z_signed,chebyshev_bound";
inline constexpr std::string_view kDistinguishHeader =
    "source,sample_size,trials,threshold,p_avg,exp_avg,std_avg,z_avg,verdict";

std::string format_real(double v);

void write_census_csv(std::ostream& out, const CensusResult& census);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_fit_csv(std::ostream& out, const FitResult& fit);
void write_summary_csv(std::ostream& out, const TrialSummary& summary);
void write_distinguisher_csv(std::ostream& out, const DistinguisherRun& run, std::string_view source);

}  // namespace sodp
