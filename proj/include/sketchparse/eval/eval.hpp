#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sketchparse/dataprep/pose.hpp"
#include "sketchparse/imaging/raster.hpp"

namespace sketchparse::eval {

using imaging::LabelMap;

struct SketchIou {
  std::map<int, double> part_iou;  // over the nonzero labels present in gt
  double siou = 0.0;
};

/// pwIOU_i = n_ii / (t_i + sum_j n_ji - n_ii) for every part i in gt; sIOU is
/// their mean. Background is not a part. Throws ContractViolation on a size
/// mismatch or a gt without parts.
SketchIou sketch_iou(const LabelMap& pred, const LabelMap& gt);

/// Arithmetic means; both throw ContractViolation on empty input.
double category_aiou(std::span<const double> sious);
double grand_average(std::span<const double> aious);

struct IouCase {
  std::string id;
  std::string category;
  std::vector<std::string> part_names;  // part_names[k-1] names label k
  LabelMap pred;
  LabelMap gt;
};

struct IouReport {
  struct Row {
    std::string id;
    std::string category;
    double siou = 0.0;
  };
  std::vector<Row> sketches;
  std::map<std::string, double> category_aiou;
  /// category -> part -> mean pwIOU over the sketches containing the part
  std::map<std::string, std::map<std::string, double>> part_iou;
  double grand = 0.0;

  /// Smallest per-part mean over all categories.
  double min_part_iou() const;
};

IouReport evaluate_iou(const std::vector<IouCase>& cases);

std::string iou_csv(const IouReport& r);
std::string iou_table(const IouReport& r);

inline constexpr std::size_t kMergedPoses = 4;

/// N stays N, S stays S, {NE,E,SE} -> E, {NW,W,SW} -> W. Indices 0..3 = N,E,S,W.
std::size_t merge_pose(dataprep::Pose p);
const char* merged_pose_name(std::size_t i);

struct PoseReport {
  std::array<std::array<std::size_t, 8>, 8> confusion8{};  // [truth][pred]
  double accuracy8 = 0.0;
  bool merged = false;
  std::array<std::array<std::size_t, 4>, 4> confusion4{};
  double accuracy4 = 0.0;
  std::size_t count = 0;
};

/// Throws ContractViolation on unequal lengths or empty input.
PoseReport pose_eval(std::span<const dataprep::Pose> preds, std::span<const dataprep::Pose> truths, bool merge);
/// Same, from compass names; an unknown name is a ContractViolation.
PoseReport pose_eval(const std::vector<std::string>& preds, const std::vector<std::string>& truths, bool merge);

std::string pose_table(const PoseReport& r);
std::string pose_csv(const PoseReport& r);

/// Square [truth][pred] count matrix.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::size_t> preds,
                                                       std::span<const std::size_t> truths, std::size_t classes);
std::string confusion_table(const std::vector<std::vector<std::size_t>>& m, const std::vector<std::string>& names);

}  // namespace sketchparse::eval
