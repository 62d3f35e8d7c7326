#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncstar::cli {

// 0 ok, 1 failed check or computation error, 2 config/parse/input error, 3 guard violation
enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kGuard = 3 };

/// args excludes the program name. Results go to --out or `out`; summaries and
/// diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ncstar::cli
