#include "sketchparse/eval/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

namespace sketchparse::eval {

using dataprep::Pose;

SketchIou sketch_iou(const LabelMap& pred, const LabelMap& gt) {
  if (!pred.same_size(gt)) {
    throw ContractViolation("sketch_iou: prediction " + std::to_string(pred.width()) + "x" +
                            std::to_string(pred.height()) + " vs ground truth " + std::to_string(gt.width()) + "x" +
                            std::to_string(gt.height()));
  }
  std::array<std::size_t, 256> truth{};
  std::array<std::size_t, 256> predicted{};
  std::array<std::size_t, 256> hit{};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    ++truth[gt[i]];
    ++predicted[pred[i]];
    if (gt[i] == pred[i]) ++hit[gt[i]];
  }
  SketchIou out;
  double sum = 0.0;
  for (int c = 1; c < 256; ++c) {
    if (truth[c] == 0) continue;
    const double iou = static_cast<double>(hit[c]) / static_cast<double>(truth[c] + predicted[c] - hit[c]);
    out.part_iou[c] = iou;
    sum += iou;
  }
  if (out.part_iou.empty()) throw ContractViolation("sketch_iou: ground truth has no part labels");
  out.siou = sum / static_cast<double>(out.part_iou.size());
  return out;
}

namespace {

double mean(std::span<const double> v, const char* what) {
  if (v.empty()) throw ContractViolation(std::string(what) + ": empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double category_aiou(std::span<const double> sious) { return mean(sious, "category_aiou"); }
double grand_average(std::span<const double> aious) { return mean(aious, "grand_average"); }

double IouReport::min_part_iou() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [cat, parts] : part_iou)
    for (const auto& [name, v] : parts) m = std::min(m, v);
  return m;
}

IouReport evaluate_iou(const std::vector<IouCase>& cases) {
  if (cases.empty()) throw ContractViolation("evaluate_iou: no cases");
  IouReport r;
  std::map<std::string, std::vector<double>> by_cat;
  std::map<std::string, std::map<std::string, std::vector<double>>> by_part;
  for (const auto& c : cases) {
    const auto s = sketch_iou(c.pred, c.gt);
    r.sketches.push_back({c.id, c.category, s.siou});
    by_cat[c.category].push_back(s.siou);
    for (const auto& [id, v] : s.part_iou) {
      const auto k = static_cast<std::size_t>(id);
      const std::string name = k <= c.part_names.size() ? c.part_names[k - 1] : "label" + std::to_string(id);
      by_part[c.category][name].push_back(v);
    }
  }
  std::vector<double> aious;
  for (const auto& [cat, v] : by_cat) {
    r.category_aiou[cat] = category_aiou(v);
    aious.push_back(r.category_aiou[cat]);
  }
  r.grand = grand_average(aious);
  for (const auto& [cat, parts] : by_part)
    for (const auto& [name, v] : parts) r.part_iou[cat][name] = mean(v, "part iou");
  return r;
}

std::string iou_csv(const IouReport& r) {
  std::string out = "kind,category,name,value\n";
  char buf[64];
  auto row = [&](const char* kind, const std::string& cat, const std::string& name, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += std::string(kind) + "," + cat + "," + name + "," + buf + "\n";
  };
  for (const auto& s : r.sketches) row("siou", s.category, s.id, s.siou);
  for (const auto& [cat, parts] : r.part_iou)
    for (const auto& [name, v] : parts) row("pwiou", cat, name, v);
  for (const auto& [cat, v] : r.category_aiou) row("aiou", cat, "", v);
  row("grand", "", "", r.grand);
  return out;
}

std::string iou_table(const IouReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s  %s\n", "category", "aIOU", "per-part pwIOU");
  out += buf;
  for (const auto& [cat, v] : r.category_aiou) {
    std::snprintf(buf, sizeof buf, "%-16s %8.2f ", cat.c_str(), 100.0 * v);
    out += buf;
    for (const auto& [name, pv] : r.part_iou.at(cat)) {
      std::snprintf(buf, sizeof buf, " %s=%.2f", name.c_str(), 100.0 * pv);
      out += buf;
    }
    out += "\n";
  }
  std::snprintf(buf, sizeof buf, "%-16s %8.2f\n", "average", 100.0 * r.grand);
  out += buf;
  return out;
}

std::size_t merge_pose(Pose p) {
  switch (p) {
    case Pose::kN: return 0;
    case Pose::kNE:
    case Pose::kE:
    case Pose::kSE: return 1;
    case Pose::kS: return 2;
    case Pose::kSW:
    case Pose::kW:
    case Pose::kNW: return 3;
  }
  throw ContractViolation("merge_pose: invalid pose");
}

const char* merged_pose_name(std::size_t i) {
  static constexpr const char* kNames[] = {"N", "E", "S", "W"};
  if (i >= kMergedPoses) throw ContractViolation("merged pose index out of range");
  return kNames[i];
}

PoseReport pose_eval(std::span<const Pose> preds, std::span<const Pose> truths, bool merge) {
  if (preds.size() != truths.size()) {
    throw ContractViolation("pose_eval: " + std::to_string(preds.size()) + " predictions but " +
                            std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw ContractViolation("pose_eval: no samples");
  PoseReport r;
  r.count = preds.size();
  r.merged = merge;
  std::size_t ok8 = 0, ok4 = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto t = static_cast<std::size_t>(dataprep::pose_index(truths[i]));
    const auto p = static_cast<std::size_t>(dataprep::pose_index(preds[i]));
    if (t >= 8 || p >= 8) throw ContractViolation("pose_eval: invalid pose value");
    ++r.confusion8[t][p];
    ok8 += t == p;
    if (merge) {
      const auto mt = merge_pose(truths[i]);
      const auto mp = merge_pose(preds[i]);
      ++r.confusion4[mt][mp];
      ok4 += mt == mp;
    }
  }
  r.accuracy8 = static_cast<double>(ok8) / static_cast<double>(r.count);
  if (merge) r.accuracy4 = static_cast<double>(ok4) / static_cast<double>(r.count);
  return r;
}

PoseReport pose_eval(const std::vector<std::string>& preds, const std::vector<std::string>& truths, bool merge) {
  std::vector<Pose> p, t;
  for (const auto& s : preds) p.push_back(dataprep::parse_pose(s));
  for (const auto& s : truths) t.push_back(dataprep::parse_pose(s));
  return pose_eval(std::span<const Pose>(p), std::span<const Pose>(t), merge);
}

namespace {

template <std::size_t N>
void append_matrix(std::string& out, const std::array<std::array<std::size_t, N>, N>& m,
                   const std::array<std::string, N>& names) {
  char buf[32];
  out += "truth\\pred";
  for (const auto& n : names) {
    std::snprintf(buf, sizeof buf, "%6s", n.c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < N; ++i) {
    std::snprintf(buf, sizeof buf, "%-10s", names[i].c_str());
    out += buf;
    for (std::size_t j = 0; j < N; ++j) {
      std::snprintf(buf, sizeof buf, "%6zu", m[i][j]);
      out += buf;
    }
    out += "\n";
  }
}

std::array<std::string, 8> names8() {
  std::array<std::string, 8> n;
  for (std::size_t i = 0; i < 8; ++i) n[i] = dataprep::pose_name(dataprep::pose_from_index(static_cast<int>(i)));
  return n;
}

std::array<std::string, 4> names4() { return {"N", "E", "S", "W"}; }

}  // namespace

std::string pose_table(const PoseReport& r) {
  std::string out;
  char buf[96];
  std::snprintf(buf, sizeof buf, "directions  accuracy\n8           %.2f\n", 100.0 * r.accuracy8);
  out += buf;
  if (r.merged) {
    std::snprintf(buf, sizeof buf, "4           %.2f\n", 100.0 * r.accuracy4);
    out += buf;
  }
  out += "\n";
  append_matrix(out, r.confusion8, names8());
  if (r.merged) {
    out += "\n";
    append_matrix(out, r.confusion4, names4());
  }
  return out;
}

std::string pose_csv(const PoseReport& r) {
  std::string out = "matrix,truth,pred,count\n";
  const auto n8 = names8();
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      out += "8," + n8[i] + "," + n8[j] + "," + std::to_string(r.confusion8[i][j]) + "\n";
  if (r.merged) {
    const auto n4 = names4();
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        out += "4," + n4[i] + "," + n4[j] + "," + std::to_string(r.confusion4[i][j]) + "\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "accuracy8,,,%.6f\n", r.accuracy8);
  out += buf;
  if (r.merged) {
    std::snprintf(buf, sizeof buf, "accuracy4,,,%.6f\n", r.accuracy4);
    out += buf;
  }
  return out;
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::size_t> preds,
                                                       std::span<const std::size_t> truths, std::size_t classes) {
  if (preds.size() != truths.size()) throw ContractViolation("confusion_matrix: length mismatch");
  std::vector<std::vector<std::size_t>> m(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= classes || truths[i] >= classes) throw ContractViolation("confusion_matrix: class out of range");
    ++m[truths[i]][preds[i]];
  }
  return m;
}

std::string confusion_table(const std::vector<std::vector<std::size_t>>& m, const std::vector<std::string>& names) {
  if (names.size() != m.size()) throw ContractViolation("confusion_table: name count mismatch");
  std::size_t w = 10;
  for (const auto& n : names) w = std::max(w, n.size() + 2);
  std::string out(w, ' ');
  auto cell = [w](const std::string& s) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
  for (const auto& n : names) out += cell(n);
  out += "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += names[i] + std::string(w > names[i].size() ? w - names[i].size() : 0, ' ');
    for (auto v : m[i]) out += cell(std::to_string(v));
    out += "\n";
  }
  return out;
}

}  // namespace sketchparse::eval
