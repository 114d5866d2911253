#pragma once

#include <iosfwd>

namespace ura {

/// `ura_sim <run|sweep|convergence|validate> --config FILE [--out DIR]
///  [--set section.key=value ...] [--seed N]`
///
/// FILE is a config text or the manifest.json of an earlier run. The output
/// directory defaults to [output] dir, then $URA_OUTPUT_DIR, then ./ura_out.
/// Returns 0 on success, 1 on a failed experiment or self check, 2 on bad
/// usage or configuration.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ura
