#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "iktrack/model.hpp"

namespace iktrack {

/// The 23 body segments, in the order they are declared as orientation targets.
/// The first one (Pelvis) is the base and the only position target.
inline constexpr std::array<std::string_view, 23> kHumanSegments = {
    "Pelvis",        "L5",           "L3",           "T12",           "T8",
    "Neck",          "Head",         "RightShoulder", "RightUpperArm", "RightForeArm",
    "RightHand",     "LeftShoulder", "LeftUpperArm", "LeftForeArm",   "LeftHand",
    "RightUpperLeg", "RightLowerLeg", "RightFoot",   "RightToe",      "LeftUpperLeg",
    "LeftLowerLeg",  "LeftFoot",     "LeftToe"};

/// Generates a 23-segment human chain scaled to a 1.75 m stature, with each
/// segment length jittered by up to ±3% from `seed`.
///
/// dofs = 66: every connection is a Z-X-Y revolute triplet joined by two
/// zero-size dummy links (67 links), all joints unbounded.
/// dofs = 48: connections keep only the anatomically relevant axes, every
/// joint has position and velocity limits, and one coupled row bounds the
/// combined elevation of the right shoulder.
///
/// Throws std::invalid_argument for any other `dofs`.
KinematicModel generate_human_chain(int dofs, std::uint64_t seed);

}  // namespace iktrack
