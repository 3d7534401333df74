#pragma once

namespace topoloc {

// Entry point behind the topoloc binary: subcommands simulate, build-map,
// localize, evaluate, match, curbs. Returns 0 on success, 1 on module
// errors (with the error name on stderr), 2 on usage errors.
int run_command(int argc, const char* const* argv);

}  // namespace topoloc
