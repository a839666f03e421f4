#pragma once

#include <map>
#include <string>
#include <vector>

#include "sketchparse/dataprep/pose.hpp"
#include "sketchparse/imaging/raster.hpp"

namespace sketchparse::describe {

struct SketchSummary {
  std::string category;
  std::string super_category;
  /// Part name and instance count, in clause order.
  std::vector<std::pair<std::string, std::size_t>> parts;
  dataprep::Pose pose = dataprep::Pose::kN;
};

/// "one".."nine", then numerals.
std::string count_word(std::size_t n);
/// Plural for n > 1 ("body" -> "bodies", otherwise a trailing "s").
std::string part_noun(const std::string& part, std::size_t n);
/// "Small Animals" -> "Small Animal".
std::string singular(const std::string& phrase);

/// "This is a sketch of a cat (a Small Animal) facing west, with one head,
/// one body, four legs and one tail." The part clause is left out when there
/// are no parts; an empty category names only the super-category ("of a Four Wheeler"),
/// and with neither the "of" clause goes.
std::string describe(const SketchSummary& s);

/// Part counts from a predicted map: 4-connected instances per part id,
/// listed in part id order. `part_names[k-1]` names label k.
std::vector<std::pair<std::string, std::size_t>> count_parts(const imaging::LabelMap& labels,
                                                             const std::vector<std::string>& part_names);

}  // namespace sketchparse::describe
