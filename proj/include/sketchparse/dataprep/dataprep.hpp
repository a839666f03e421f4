#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sketchparse/dataprep/pose.hpp"
#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/taxonomy/taxonomy.hpp"

namespace sketchparse::dataprep {

using imaging::LabelMap;
using imaging::Raster;

struct PairedSample {
  Raster sketch;
  LabelMap labels;
  std::string category;
  Pose pose = Pose::kE;
};

/// dilate_square(canny(photo) | label_boundaries(labels), 3)
Raster sketchify(const Raster& photo, const LabelMap& labels,
                 const imaging::CannyParams& canny = imaging::kDefaultCanny);

inline constexpr std::array<double, 7> kSegRotations{0, 10, -10, 20, -20, 30, -30};
inline constexpr std::array<double, 7> kClsRotations{0, 4, -4, 8, -8, 12, -12};
inline constexpr std::array<double, 5> kClsScales{1.0, 0.97, 1.03, 0.93, 1.07};
inline constexpr std::size_t kSegVariants = 2 * kSegRotations.size();
inline constexpr std::size_t kClsVariants = 2 * kClsRotations.size() * kClsScales.size();

/// 7 rotations x {identity, mirror}. The first entry is the input itself.
/// Mirrored variants carry the mirrored pose; rotations keep it.
std::vector<PairedSample> augment_seg(const PairedSample& p);
/// Entry `index` of augment_seg(p) without building the others.
PairedSample augment_seg_variant(const PairedSample& p, std::size_t index);

/// 7 rotations x 5 scales x {identity, mirror}; the first entry is the input.
std::vector<Raster> augment_cls(const Raster& sketch);
Raster augment_cls_variant(const Raster& sketch, std::size_t index);

/// One drawn figure before sketchification.
struct Figure {
  Raster photo;
  LabelMap labels;
  Pose pose = Pose::kE;
};

/// Procedural figure for `category`. Label ids come from the category's
/// branch in `tax`. Throws ConfigError when no template exists for the
/// category or the template draws a part the category does not list.
Figure draw_figure(const taxonomy::Taxonomy& tax, const std::string& category, std::uint64_t seed,
                   std::size_t size = 128);

/// Categories that have a drawing template.
std::vector<std::string> template_names();

struct CorpusSpec {
  const taxonomy::Taxonomy* taxonomy = nullptr;
  /// Categories to draw; empty means every category of the taxonomy.
  std::vector<std::string> categories;
  std::size_t per_category = 10;
  std::uint64_t seed = 0;
  std::size_t image_size = 128;
  imaging::CannyParams canny = imaging::kDefaultCanny;
};

/// Writes <root>/<category>/<id>.sketch.pgm, <id>.labels.pgm and
/// <root>/poses.csv. Returns the number of samples written.
std::size_t gen_corpus(const CorpusSpec& spec, const std::filesystem::path& root);

struct DatasetItem {
  std::string id;  // "<category>/<nnnn>"
  std::string category;
  std::size_t branch = 0;
  PairedSample sample;
};

/// Reads a corpus written by gen_corpus (or laid out the same way). Items are
/// ordered as in poses.csv. Categories unknown to `tax` raise ConfigError.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& root, const taxonomy::Taxonomy& tax);

}  // namespace sketchparse::dataprep
