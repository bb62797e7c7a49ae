#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmqt/fields.hpp"
#include "bmqt/params.hpp"

namespace bmqt {

enum class RunMode { PotentialEval, PotentialVerify, Analysis, Simulate };

std::string to_string(RunMode mode);

struct QuadratureOrders {
  int polar = 64;
  int azimuthal = 64;
};

/// Settings for the `potential eval` tabulation.
struct PotentialEvalConfig {
  int grid = 50;        // barycentric grid resolution per edge
  double margin = 0.02;
};

/// Settings for the `potential verify` oracle suite.
struct PotentialVerifyConfig {
  long duality_samples = 1000;
  long gradient_samples = 500;
  long hessian_samples = 200;
  double margin = 0.02;
};

/// Settings for the `analysis` checks.
struct AnalysisConfig {
  long samples = 10000;
  std::vector<double> margins{0.05, 0.02, 0.01, 0.005};
  double epsilon = 0.0;  // 0: derive as (ftest1 infimum)/2
  QuadratureOrders quad{96, 64};
  QuadratureOrders iij_quad{16, 16};
  int directions = 10;
  int rho_doublings = 10;  // rho = 1, 2, ..., 2^doublings
  int quad_1d_order = 64;
  double alpha_max = 512.0;
};

/// Fully-validated run configuration. Every field has the documented
/// default; unknown keys in the document are errors.
struct RunConfig {
  RunMode mode = RunMode::Simulate;
  std::uint64_t seed = 1;
  bool singular_flux = false;
  int grid_size = 32;
  double dt = 1e-3;
  double t_end = 0.5;
  int diagnostics_cadence = 1;   // steps between NDJSON samples
  int checkpoint_cadence = 0;    // samples between checkpoints (0 = final only)
  QuadratureOrders quadrature{64, 64};     // potential-module rule
  QuadratureOrders sim_quadrature{8, 16};  // nodewise rule inside the stepper
  ModelParams model;
  InitParams init;
  double entropy_tolerance = 5e-4;  // audit bound on the integrated inequality
  int audit_bumps = 5;
  PotentialEvalConfig potential_eval;
  PotentialVerifyConfig potential_verify;
  AnalysisConfig analysis;
  std::string output_dir = "out";
};

/// Parses and validates a JSON configuration document. Unknown keys are
/// rejected (config_error naming the key); constraint violations name the
/// violated hypothesis (e.g. "defiA violated: (3k+2m)/3 = 5.33 <= 9").
/// `validate = false` defers constraint checking (the CLI applies flag
/// overrides first, then calls validate_config).
RunConfig parse_config(const std::string& text, bool validate = true);

/// Reads, parses and validates a config file.
RunConfig load_config_file(const std::string& path, bool validate = true);

/// Re-validates a config after programmatic changes; throws config_error.
void validate_config(const RunConfig& cfg);

}  // namespace bmqt
