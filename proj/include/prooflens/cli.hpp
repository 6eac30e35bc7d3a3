#pragma once

namespace prooflens {

// Entry point behind the prooflens binary. Exit codes: 0 success, 1 usage
// error, 2 data/model error.
int run_cli(int argc, const char* const* argv);

}  // namespace prooflens
