#include "sketchparse/dataprep/pose.hpp"

#include "sketchparse/numcore/tensor.hpp"

namespace sketchparse::dataprep {

namespace {
constexpr std::array<std::string_view, kPoseCount> kNames{"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
constexpr std::array<std::string_view, kPoseCount> kPhrases{
    "north", "north-east", "east", "south-east", "south", "south-west", "west", "north-west"};
constexpr std::array<int, kPoseCount> kDx{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, kPoseCount> kDy{-1, -1, 0, 1, 1, 1, 0, -1};
}  // namespace

std::string_view pose_name(Pose p) { return kNames.at(static_cast<std::size_t>(p)); }

std::string_view pose_phrase(Pose p) { return kPhrases.at(static_cast<std::size_t>(p)); }

Pose parse_pose(std::string_view name) {
  for (std::size_t i = 0; i < kPoseCount; ++i)
    if (kNames[i] == name) return kAllPoses[i];
  throw ContractViolation("unknown pose label '" + std::string(name) + "'");
}

Pose pose_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kPoseCount)) {
    throw ContractViolation("pose index " + std::to_string(index) + " outside 0..7");
  }
  return kAllPoses[static_cast<std::size_t>(index)];
}

Pose mirror_pose(Pose p) {
  // Reflection about the N-S axis: index i -> (8 - i) mod 8.
  return kAllPoses[(kPoseCount - static_cast<std::size_t>(p)) % kPoseCount];
}

int pose_dx(Pose p) { return kDx[static_cast<std::size_t>(p)]; }
int pose_dy(Pose p) { return kDy[static_cast<std::size_t>(p)]; }

}  // namespace sketchparse::dataprep
