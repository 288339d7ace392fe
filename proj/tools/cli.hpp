#pragma once

#include <iosfwd>

namespace stratexact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIntractable = 3;

/// Runs one stratexact command line. Results go to `out`, diagnostics and a
/// sampled seed to `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stratexact::cli
