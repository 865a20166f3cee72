#ifndef HEADPOP_CLI_H
#define HEADPOP_CLI_H

#include <iosfwd>

namespace headpop::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDataError = 3,
  kDivergence = 4,
  kIoError = 5,
};

// Subcommands: label, train, eval, predict, introspect, serve, synth,
// debug-model. Errors go to `err` as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace headpop::cli

#endif  // HEADPOP_CLI_H
