#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sketchparse/eval/eval.hpp"
#include "sketchparse/graphrank/graphrank.hpp"
#include "sketchparse/parsenet/model.hpp"
#include "sketchparse/routercls/router.hpp"

namespace sketchparse::interface {

inline constexpr int kFormatVersion = 1;

struct InferenceRecord {
  std::string id;
  /// Set only when the chosen branch holds a single category.
  std::optional<std::string> category;
  std::string supercategory;
  std::size_t branch = 0;
  bool forced = false;
  dataprep::Pose pose = dataprep::Pose::kN;
  std::vector<std::pair<std::string, std::size_t>> part_counts;
  std::string description;
  /// Pooled router scores per branch; empty when no router ran.
  std::vector<double> router_scores;
};

/// Router, parser and taxonomy for one run. `router` may be null when every
/// call forces a branch.
struct Pipeline {
  const taxonomy::Taxonomy* taxonomy = nullptr;
  const parsenet::Model<float>* parser = nullptr;
  const routercls::RouterNet* router = nullptr;
  routercls::PoolingConfig pooling;

  /// Refuses parts trained against another taxonomy.
  void check() const;
};

struct InferOutput {
  imaging::LabelMap labels;
  InferenceRecord record;
};

/// classify_pooled whenever a router is present (its scores are recorded even
/// when `forced_branch` overrides the choice), parsenet::infer on the chosen
/// branch, then part counting and the description.
InferOutput infer_sketch(const Pipeline& p, const std::string& id, const imaging::Raster& sketch,
                         std::optional<std::size_t> forced_branch = std::nullopt);

/// Pretty JSON with sorted keys and a format_version field.
std::string record_json(const InferenceRecord& r, const taxonomy::Taxonomy& tax);

struct SketchSource {
  std::string id;
  std::filesystem::path path;
};

/// A corpus root (has poses.csv) yields its ids; another directory yields
/// every *.pgm below it; a file yields itself. Ids drop ".sketch.pgm" or
/// ".pgm". Results are sorted by id.
std::vector<SketchSource> find_sketches(const std::filesystem::path& input);

struct DirEvaluation {
  eval::IouReport iou;
  /// Present when every prediction has a JSON record with a pose.
  std::optional<eval::PoseReport> pose;
};

/// Scores <pred_root>/<id>.pred.pgm (or <id>.labels.pgm) against the corpus
/// at `gt_root`. A missing prediction is a ConfigError.
DirEvaluation evaluate_dirs(const std::filesystem::path& pred_root, const std::filesystem::path& gt_root,
                            const taxonomy::Taxonomy& tax, bool merge4);

/// Reads ids one per line (blank lines and '#' comments skipped) and loads
/// <db_root>/<id>.labels.pgm for each.
std::vector<graphrank::RankedCandidate> load_ranking(const std::filesystem::path& ranking_file,
                                                     const std::filesystem::path& db_root);

}  // namespace sketchparse::interface
