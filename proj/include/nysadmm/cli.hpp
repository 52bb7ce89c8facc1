#pragma once

namespace nysadmm {

/// Entry point of the `nysadmm` command line tool.
/// Returns 0 when the solve converged, 2 when it stopped at the iteration
/// limit and 1 on any error (usage errors included).
int cli_main(int argc, char** argv);

}  // namespace nysadmm
