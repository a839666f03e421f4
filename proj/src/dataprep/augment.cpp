#include "sketchparse/dataprep/dataprep.hpp"

namespace sketchparse::dataprep {

Raster sketchify(const Raster& photo, const LabelMap& labels, const imaging::CannyParams& canny) {
  if (!photo.same_size(labels)) {
    throw ContractViolation("sketchify: photo " + std::to_string(photo.width()) + "x" +
                            std::to_string(photo.height()) + " vs labels " + std::to_string(labels.width()) +
                            "x" + std::to_string(labels.height()));
  }
  Raster merged = imaging::canny(photo, canny);
  const Raster contours = imaging::label_boundaries(labels);
  for (std::size_t i = 0; i < merged.size(); ++i)
    if (contours[i]) merged[i] = imaging::kInk;
  return imaging::dilate_square(merged, 3);
}

std::vector<PairedSample> augment_seg(const PairedSample& p) {
  std::vector<PairedSample> out;
  out.reserve(kSegVariants);
  for (bool mirror : {false, true}) {
    const Raster sketch = mirror ? imaging::mirror_v(p.sketch) : p.sketch;
    const LabelMap labels = mirror ? imaging::mirror_v(p.labels) : p.labels;
    const Pose pose = mirror ? mirror_pose(p.pose) : p.pose;
    for (double deg : kSegRotations) {
      out.push_back({imaging::rotate(sketch, deg), imaging::rotate(labels, deg), p.category, pose});
    }
  }
  return out;
}

PairedSample augment_seg_variant(const PairedSample& p, std::size_t index) {
  if (index >= kSegVariants) throw ContractViolation("augment_seg_variant: index " + std::to_string(index));
  const bool mirror = index >= kSegRotations.size();
  const double deg = kSegRotations[index % kSegRotations.size()];
  if (!mirror) return {imaging::rotate(p.sketch, deg), imaging::rotate(p.labels, deg), p.category, p.pose};
  return {imaging::rotate(imaging::mirror_v(p.sketch), deg), imaging::rotate(imaging::mirror_v(p.labels), deg),
          p.category, mirror_pose(p.pose)};
}

std::vector<Raster> augment_cls(const Raster& sketch) {
  std::vector<Raster> out;
  out.reserve(kClsVariants);
  for (bool mirror : {false, true}) {
    const Raster base = mirror ? imaging::mirror_v(sketch) : sketch;
    for (double deg : kClsRotations)
      for (double s : kClsScales) out.push_back(imaging::rotate(imaging::rescale(base, s), deg));
  }
  return out;
}

Raster augment_cls_variant(const Raster& sketch, std::size_t index) {
  if (index >= kClsVariants) throw ContractViolation("augment_cls_variant: index " + std::to_string(index));
  const std::size_t per_mirror = kClsRotations.size() * kClsScales.size();
  const Raster base = index >= per_mirror ? imaging::mirror_v(sketch) : sketch;
  const std::size_t r = index % per_mirror;
  return imaging::rotate(imaging::rescale(base, kClsScales[r % kClsScales.size()]),
                         kClsRotations[r / kClsScales.size()]);
}

}  // namespace sketchparse::dataprep
