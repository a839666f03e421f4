#include "sketchparse/interface/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sketchparse/dataprep/dataprep.hpp"
#include "sketchparse/describe/describe.hpp"
#include "sketchparse/parsenet/checkpoint.hpp"

namespace sketchparse::interface {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string strip_suffix(std::string s) {
  for (std::string_view suf : {".sketch.pgm", ".pgm"}) {
    if (ends_with(s, suf)) return s.substr(0, s.size() - suf.size());
  }
  return s;
}

}  // namespace

void Pipeline::check() const {
  if (taxonomy == nullptr || parser == nullptr) throw ConfigError("pipeline needs a taxonomy and a parser");
  const auto d = taxonomy->digest();
  parsenet::check_digest(parser->digest, d, "parser checkpoint");
  if (router != nullptr) {
    parsenet::check_digest(router->digest, d, "router checkpoint");
    if (router->classes != parser->branch_count()) {
      throw ConfigError("router has " + std::to_string(router->classes) + " classes, parser has " +
                        std::to_string(parser->branch_count()) + " branches");
    }
  }
}

InferOutput infer_sketch(const Pipeline& p, const std::string& id, const imaging::Raster& sketch,
                         std::optional<std::size_t> forced_branch) {
  p.check();
  const auto& tax = *p.taxonomy;
  InferOutput out;
  auto& r = out.record;
  r.id = id;
  if (p.router != nullptr) {
    const auto cls = routercls::classify_pooled(*p.router, sketch, p.pooling);
    r.router_scores = cls.scores;
    r.branch = cls.branch;
  } else if (!forced_branch) {
    throw ConfigError("inference without a router needs a forced branch");
  }
  if (forced_branch) {
    if (*forced_branch >= tax.branch_count()) throw ContractViolation("forced branch out of range");
    r.branch = *forced_branch;
    r.forced = true;
  }
  const auto res = parsenet::infer(*p.parser, r.branch, sketch);
  out.labels = res.labels;
  const auto& b = tax.branch(r.branch);
  r.supercategory = b.name;
  if (b.categories.size() == 1) r.category = b.categories.front().name;
  r.pose = res.pose;
  r.part_counts = describe::count_parts(res.labels, b.parts);
  describe::SketchSummary s;
  s.category = r.category.value_or("");
  s.super_category = r.supercategory;
  s.parts = r.part_counts;
  s.pose = r.pose;
  r.description = describe::describe(s);
  return out;
}

std::string record_json(const InferenceRecord& r, const taxonomy::Taxonomy& tax) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["id"] = r.id;
  if (r.category) j["category"] = *r.category;
  j["supercategory"] = r.supercategory;
  j["branch"] = r.branch;
  j["forced_branch"] = r.forced;
  j["pose"] = std::string(dataprep::pose_name(r.pose));
  nlohmann::json parts = nlohmann::json::object();
  for (const auto& [name, n] : r.part_counts) parts[name] = n;
  j["part_counts"] = parts;
  j["description"] = r.description;
  nlohmann::json scores = nlohmann::json::object();
  for (std::size_t k = 0; k < r.router_scores.size(); ++k) scores[tax.branch(k).name] = r.router_scores[k];
  j["router_scores"] = scores;
  return j.dump(2) + "\n";
}

std::vector<SketchSource> find_sketches(const std::filesystem::path& input) {
  namespace fs = std::filesystem;
  std::vector<SketchSource> out;
  if (!fs::exists(input)) throw ConfigError("input " + input.string() + " does not exist");
  if (fs::is_regular_file(input)) {
    out.push_back({strip_suffix(input.filename().string()), input});
    return out;
  }
  if (fs::exists(input / "poses.csv")) {
    std::ifstream in(input / "poses.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto comma = line.rfind(',');
      if (comma == std::string::npos || line.rfind("relative_path", 0) == 0) continue;
      const std::string rel = line.substr(0, comma);
      out.push_back({strip_suffix(rel), input / rel});
    }
  } else {
    for (const auto& e : fs::recursive_directory_iterator(input)) {
      const std::string name = e.path().filename().string();
      if (!e.is_regular_file() || !ends_with(name, ".pgm") || ends_with(name, ".labels.pgm") ||
          ends_with(name, ".pred.pgm")) {
        continue;
      }
      out.push_back({strip_suffix(fs::relative(e.path(), input).generic_string()), e.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

DirEvaluation evaluate_dirs(const std::filesystem::path& pred_root, const std::filesystem::path& gt_root,
                            const taxonomy::Taxonomy& tax, bool merge4) {
  namespace fs = std::filesystem;
  const auto items = dataprep::load_dataset(gt_root, tax);
  if (items.empty()) throw ConfigError("ground-truth corpus " + gt_root.string() + " is empty");
  std::vector<eval::IouCase> cases;
  std::vector<dataprep::Pose> pred_poses, true_poses;
  bool all_poses = true;
  for (const auto& it : items) {
    fs::path pred = pred_root / (it.id + ".pred.pgm");
    if (!fs::exists(pred)) pred = pred_root / (it.id + ".labels.pgm");
    if (!fs::exists(pred)) throw ConfigError("no prediction for " + it.id + " under " + pred_root.string());
    eval::IouCase c;
    c.id = it.id;
    c.category = it.category;
    c.part_names = tax.branch(it.branch).parts;
    c.pred = imaging::read_labels(pred);
    c.gt = it.sample.labels;
    cases.push_back(std::move(c));

    const fs::path rec = pred_root / (it.id + ".json");
    if (all_poses && fs::exists(rec)) {
      std::ifstream in(rec);
      const auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_object() && j.contains("pose") && j["pose"].is_string()) {
        pred_poses.push_back(dataprep::parse_pose(j["pose"].get<std::string>()));
        true_poses.push_back(it.sample.pose);
        continue;
      }
    }
    all_poses = false;
  }
  DirEvaluation out;
  out.iou = eval::evaluate_iou(cases);
  if (all_poses) out.pose = eval::pose_eval(pred_poses, true_poses, merge4);
  return out;
}

std::vector<graphrank::RankedCandidate> load_ranking(const std::filesystem::path& ranking_file,
                                                     const std::filesystem::path& db_root) {
  std::ifstream in(ranking_file);
  if (!in) throw ConfigError("cannot read ranking " + ranking_file.string());
  std::vector<graphrank::RankedCandidate> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string id = line.substr(b, e - b + 1);
    const auto path = db_root / (id + ".labels.pgm");
    if (!std::filesystem::exists(path)) throw ConfigError("ranked id '" + id + "' has no " + path.string());
    out.push_back({id, imaging::read_labels(path)});
  }
  return out;
}

}  // namespace sketchparse::interface
