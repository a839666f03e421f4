#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sketchparse/dataprep/dataprep.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::dataprep {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sample_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace

std::size_t gen_corpus(const CorpusSpec& spec, const std::filesystem::path& root) {
  if (spec.taxonomy == nullptr) throw ConfigError("gen_corpus: no taxonomy given");
  if (spec.per_category == 0) throw ConfigError("gen_corpus: per-category count must be positive");
  if (spec.image_size < 32) throw ConfigError("gen_corpus: image size below 32");
  std::vector<std::string> cats = spec.categories;
  if (cats.empty()) {
    for (const auto& b : spec.taxonomy->branches())
      for (const auto& c : b.categories) cats.push_back(c.name);
  }
  const auto known = template_names();
  for (const auto& c : cats) {
    spec.taxonomy->category(c);
    if (std::find(known.begin(), known.end(), c) == known.end()) {
      throw ConfigError("no drawing template for category '" + c + "'");
    }
  }

  std::filesystem::create_directories(root);
  std::ostringstream poses;
  poses << "relative_path,pose\n";
  std::size_t written = 0;
  for (const auto& c : cats) {
    const std::uint64_t base = numcore::mix64(numcore::mix64(spec.seed) ^ fnv1a(c));
    for (std::size_t i = 0; i < spec.per_category; ++i) {
      const Figure fig = draw_figure(*spec.taxonomy, c, base + i, spec.image_size);
      const Raster sketch = sketchify(fig.photo, fig.labels, spec.canny);
      const std::string stem = c + "/" + sample_name(i);
      imaging::write_pgm(sketch, root / (stem + ".sketch.pgm"));
      imaging::write_pgm(fig.labels, root / (stem + ".labels.pgm"));
      poses << stem << ".sketch.pgm," << pose_name(fig.pose) << "\n";
      ++written;
    }
  }
  std::ofstream out(root / "poses.csv", std::ios::binary);
  out << poses.str();
  if (!out) throw std::runtime_error("cannot write " + (root / "poses.csv").string());
  return written;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& root, const taxonomy::Taxonomy& tax) {
  std::ifstream in(root / "poses.csv");
  if (!in) throw ConfigError("dataset " + root.string() + " has no poses.csv");
  std::vector<DatasetItem> items;
  std::string line;
  std::size_t line_no = 0;
  constexpr std::string_view kSuffix = ".sketch.pgm";
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("relative_path", 0) == 0)) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ConfigError("poses.csv line " + std::to_string(line_no) + ": expected 'relative_path,pose'");
    }
    const std::string rel = line.substr(0, comma);
    if (rel.size() <= kSuffix.size() || rel.substr(rel.size() - kSuffix.size()) != kSuffix) {
      throw ConfigError("poses.csv line " + std::to_string(line_no) + ": path must end in .sketch.pgm");
    }
    DatasetItem item;
    item.id = rel.substr(0, rel.size() - kSuffix.size());
    item.category = std::filesystem::path(item.id).parent_path().filename().string();
    try {
      item.branch = tax.branch_of(item.category);
    } catch (const std::out_of_range&) {
      throw ConfigError("dataset category '" + item.category + "' is not in the taxonomy");
    }
    item.sample.category = item.category;
    item.sample.pose = parse_pose(line.substr(comma + 1));
    item.sample.sketch = imaging::read_raster(root / rel);
    item.sample.labels = imaging::read_labels(root / (item.id + ".labels.pgm"));
    if (!item.sample.sketch.same_size(item.sample.labels)) {
      throw ConfigError("sketch and labels of " + item.id + " differ in size");
    }
    const auto n = tax.part_count(item.branch);
    for (auto v : item.sample.labels.pixels()) {
      if (v > n) {
        throw ConfigError("label id " + std::to_string(v) + " in " + item.id + " exceeds branch part count " +
                          std::to_string(n));
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace sketchparse::dataprep
