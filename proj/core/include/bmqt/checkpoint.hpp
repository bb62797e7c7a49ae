#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bmqt/fields.hpp"
#include "bmqt/params.hpp"

namespace bmqt {

/// Binary checkpoint layout (all integers and floats little-endian):
///   bytes 0..3   magic "BMQT"
///   bytes 4..7   format version (u32, currently 1)
///   bytes 8..11  grid size n (u32)
///   bytes 12..19 simulation time (f64)
///   bytes 20..51 parameter digest: SHA-256 of the canonical parameter string
///   then 9 nodal f64 arrays of n^3 values each, z-fastest, in the order
///   u_x, u_y, u_z, Q_xx, Q_yy, Q_xy, Q_xz, Q_yz, theta.
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Canonical serialization of the model parameters (input of the digest):
/// "xi=<17g>;lambda_bulk=<17g>;..." in declared field order.
std::string canonical_param_string(const ModelParams& params);

/// SHA-256 digest of canonical_param_string.
std::array<std::uint8_t, 32> param_digest(const ModelParams& params);

/// Writes nodal fields (spectra and cache are not stored; rebuild with
/// Stepper::prime after loading).
void save_checkpoint(const std::string& path, const FieldState& st, const ModelParams& params);

/// Loads and validates magic, version, grid size and parameter digest;
/// throws config_error on any mismatch.
FieldState load_checkpoint(const std::string& path, const ModelParams& params);

}  // namespace bmqt
