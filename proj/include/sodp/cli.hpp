// cli.hpp
// The `sodp` command line: build or load a prime cache, run one experiment,
// write CSV. Exit codes: 0 success, 1 usage error, 2 data or runtime error.
//
// Every output file starts with one '#' line holding the resolved
// configuration. It never contains timestamps, paths of output files or the
// thread count, so the same command line always produces the same bytes.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace sodp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// $SODP_CACHE_DIR/primes_<count>.sodp, or empty when the variable is unset.
std::string default_cache_path(std::uint64_t count);

}  // namespace sodp::cli
