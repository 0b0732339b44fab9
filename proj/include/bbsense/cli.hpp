#pragma once

#include <ostream>

namespace bbsense {

/// Entry point of the bbsense tool. Exit codes: 0 success, 1 validation or
/// runtime failure, 2 usage or schema error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bbsense
