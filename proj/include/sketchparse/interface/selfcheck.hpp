#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sketchparse::interface {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant suite: finite-difference gradients of every layer and of
/// the total loss, route/recombine identity, balance and IOU oracles, RRWM
/// permutation equivariance and augmentation cardinalities.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed = 0);

}  // namespace sketchparse::interface
