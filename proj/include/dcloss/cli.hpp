#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dcloss::cli {

/// Runs one CLI invocation.  Reports go to `out` as a single JSON document
/// (doubles printed with 17 significant digits, keys in fixed order, so the
/// output is byte-identical for identical input); usage problems go to `err`
/// as plain text.  Returns the process exit code: 0 on success, 1 on a
/// validation fault or analysis error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dcloss::cli
