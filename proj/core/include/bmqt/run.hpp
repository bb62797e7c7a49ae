#pragma once

#include <string>

#include "bmqt/config.hpp"

namespace bmqt {

/// Executes a validated configuration: dispatches on cfg.mode, writes all
/// artifacts under cfg.output_dir (created if missing) and returns the
/// process exit status (0 iff every audit/check passed). For Analysis mode,
/// `analysis_check` selects one of ftest1 | concavity | laplace | case2.
int run(const RunConfig& cfg, const std::string& analysis_check = "");

}  // namespace bmqt
