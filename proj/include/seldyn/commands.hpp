#ifndef SELDYN_COMMANDS_HPP
#define SELDYN_COMMANDS_HPP

namespace seldyn {

/// Command-line entry point (forward | train | analyze | gradcheck).
/// Kept out of main() so tests can drive the tool in-process.
///
/// Exit codes:
///   0  success
///   2  configuration problems: bad flags, unreadable or malformed
///      config/CSV files, missing sections
///   3  runs that finished without reaching their goal: divergence,
///      non-converged training, a failed gradient check
///   4  violated mathematical preconditions (domain errors raised by
///      the library)
int run_cli(int argc, const char* const* argv);

}  // namespace seldyn

#endif
