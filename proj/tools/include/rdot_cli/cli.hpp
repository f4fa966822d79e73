#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rdot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

/// Version string embedded in every JSON report.
const char* version();

/// Runs the command line `args` (without the program name). Reports go to
/// the --out file, or to `out` when none is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Parses "min:max:count" into log-spaced values, or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

/// Parses "M" or "lo:hi" into the inclusive list of levels.
std::vector<std::size_t> parse_levels(const std::string& text);

}  // namespace rdot::cli
