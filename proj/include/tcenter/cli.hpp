#pragma once

#include <ostream>

namespace tcenter {

// Exit codes of the administrator CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// tcenter serve --config PATH
/// tcenter import --file PATH [--config PATH]
/// tcenter export --lang L --out PATH [--config PATH]
/// tcenter stats [--lang L] [--config PATH]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tcenter
