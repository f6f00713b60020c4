#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "iktrack/model.hpp"

namespace iktrack {

/// Parses a model document:
///
///   {
///     "links": [{"name": "pelvis", "dummy": false}, ...],
///     "joints": [{"name": "j0", "parent": "pelvis", "child": "l5",
///                 "axis": [0, 0, 1],
///                 "origin": {"xyz": [0, 0, 0.1], "rpy": [0, 0, 0]},
///                 "pos_limits": [-1.0, 1.0], "vel_limit": 8.0}, ...],
///     "base_link": "pelvis",
///     "position_targets": ["pelvis"],
///     "orientation_targets": ["pelvis", ...],
///     "constraints": {"A": [[...], ...], "b_q": [...], "b_nu": [...]}
///   }
///
/// `dummy`, `origin`, `pos_limits`, `vel_limit` and `constraints` are optional;
/// `null` in `pos_limits`, `b_q` or `b_nu` means unbounded. Unknown keys are
/// rejected. Throws ParseError (byte offset) or ValidationError (rule name).
KinematicModel load_model(std::string_view text);
KinematicModel load_model_file(const std::filesystem::path& path);

/// Inverse of load_model; numbers are written with round-trip precision.
std::string serialize_model(const KinematicModel& model);
void save_model_file(const KinematicModel& model, const std::filesystem::path& path);

}  // namespace iktrack
