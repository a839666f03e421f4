#include <algorithm>

#include "sketchparse/learn/learn.hpp"

namespace sketchparse::learn {

ClassBalance compute_class_balance(const std::vector<imaging::LabelMap>& maps,
                                   const std::vector<std::string>& label_names) {
  const std::size_t L = label_names.size();
  if (L == 0) throw ConfigError("class balance needs at least one label");
  std::vector<std::uint64_t> pixels(L, 0);
  std::vector<std::uint64_t> images(L, 0);
  std::vector<std::uint64_t> seen(L);
  for (const auto& m : maps) {
    std::fill(seen.begin(), seen.end(), 0);
    for (auto v : m.pixels()) {
      if (v >= L) {
        throw ConfigError("label id " + std::to_string(v) + " outside the " + std::to_string(L) + " balanced labels");
      }
      ++seen[v];
    }
    for (std::size_t c = 0; c < L; ++c) {
      pixels[c] += seen[c];
      if (seen[c] > 0) ++images[c];
    }
  }
  ClassBalance b;
  b.frequency.resize(L);
  for (std::size_t c = 0; c < L; ++c) {
    if (images[c] == 0) throw ConfigError("label '" + label_names[c] + "' never occurs in the dataset");
    b.frequency[c] = static_cast<double>(pixels[c]) / static_cast<double>(images[c]);
  }
  std::vector<double> sorted = b.frequency;
  std::sort(sorted.begin(), sorted.end());
  b.median = L % 2 == 1 ? sorted[L / 2] : (sorted[L / 2 - 1] + sorted[L / 2]) / 2.0;
  b.alpha.resize(L);
  for (std::size_t c = 0; c < L; ++c) b.alpha[c] = b.median / b.frequency[c];
  return b;
}

ClassBalance compute_class_balance(const std::vector<dataprep::DatasetItem>& items, const taxonomy::Taxonomy& tax,
                                   std::size_t branch, bool include_background) {
  const auto& parts = tax.branch(branch).parts;
  std::vector<imaging::LabelMap> maps;
  std::vector<bool> present(parts.size() + 1, false);
  for (const auto& it : items) {
    if (it.branch != branch) continue;
    maps.push_back(it.sample.labels);
    for (auto v : it.sample.labels.pixels())
      if (v < present.size()) present[v] = true;
  }
  // Labels absent from the corpus carry no loss; balance the rest and give
  // the absent ones weight 1.
  std::vector<int> remap(present.size(), -1);
  std::vector<std::size_t> kept;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (!present[c] && c != 0) continue;
    remap[c] = static_cast<int>(kept.size());
    kept.push_back(c);
    names.push_back(c == 0 ? "background" : parts[c - 1]);
  }
  for (auto& m : maps)
    for (auto& v : m.pixels())
      if (v < remap.size()) v = static_cast<std::uint8_t>(remap[v]);
  const ClassBalance sub = compute_class_balance(maps, names);

  ClassBalance b;
  b.frequency.assign(present.size(), 0.0);
  b.alpha.assign(present.size(), 1.0);
  for (std::size_t k = 0; k < kept.size(); ++k) b.frequency[kept[k]] = sub.frequency[k];
  std::vector<double> f;
  for (std::size_t k = include_background ? 0 : 1; k < kept.size(); ++k) f.push_back(sub.frequency[k]);
  if (f.empty()) return b;
  std::sort(f.begin(), f.end());
  const std::size_t n = f.size();
  b.median = n % 2 == 1 ? f[n / 2] : (f[n / 2 - 1] + f[n / 2]) / 2.0;
  for (std::size_t k = include_background ? 0 : 1; k < kept.size(); ++k) {
    b.alpha[kept[k]] = b.median / sub.frequency[k];
  }
  return b;
}

ClassBalance uniform_balance(std::size_t classes) {
  ClassBalance b;
  b.frequency.assign(classes, 1.0);
  b.median = 1.0;
  b.alpha.assign(classes, 1.0);
  return b;
}

}  // namespace sketchparse::learn
