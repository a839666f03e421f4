#pragma once

#include <array>
#include <string>
#include <string_view>

namespace sketchparse::dataprep {

/// Eight compass directions, clockwise from north. The numeric value is the
/// class index used by the pose head.
enum class Pose { kN, kNE, kE, kSE, kS, kSW, kW, kNW };

inline constexpr std::size_t kPoseCount = 8;
inline constexpr std::array<Pose, kPoseCount> kAllPoses{Pose::kN,  Pose::kNE, Pose::kE, Pose::kSE,
                                                       Pose::kS, Pose::kSW, Pose::kW, Pose::kNW};

/// "N", "NE", ...
std::string_view pose_name(Pose p);
/// Inverse of pose_name; throws ContractViolation on unknown text.
Pose parse_pose(std::string_view name);
/// "north", "north-east", ...
std::string_view pose_phrase(Pose p);
Pose pose_from_index(int index);
inline int pose_index(Pose p) { return static_cast<int>(p); }

/// Pose after mirroring about the vertical axis: E<->W, NE<->NW, SE<->SW.
Pose mirror_pose(Pose p);

/// Horizontal and vertical unit components (east and south positive).
int pose_dx(Pose p);
int pose_dy(Pose p);

}  // namespace sketchparse::dataprep
