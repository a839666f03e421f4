#include "sketchparse/describe/describe.hpp"

#include <map>

#include "sketchparse/imaging/ops.hpp"

namespace sketchparse::describe {

std::string count_word(std::size_t n) {
  static constexpr const char* kWords[] = {"zero", "one", "two",   "three", "four",
                                           "five", "six", "seven", "eight", "nine"};
  return n < 10 ? kWords[n] : std::to_string(n);
}

std::string part_noun(const std::string& part, std::size_t n) {
  if (n <= 1) return part;
  static const std::map<std::string, std::string> kIrregular{{"body", "bodies"}, {"leg", "legs"}};
  if (const auto it = kIrregular.find(part); it != kIrregular.end()) return it->second;
  return part + "s";
}

std::string singular(const std::string& phrase) {
  if (phrase.size() > 1 && phrase.back() == 's' && phrase[phrase.size() - 2] != 's') {
    return phrase.substr(0, phrase.size() - 1);
  }
  return phrase;
}

namespace {

std::string article(const std::string& noun) {
  if (noun.empty()) return "a";
  switch (noun[0]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case 'A': case 'E': case 'I': case 'O': case 'U':
      return "an";
    default:
      return "a";
  }
}

}  // namespace

std::string describe(const SketchSummary& s) {
  std::string out = "This is a sketch";
  const std::string sc = s.super_category.empty() ? "" : singular(s.super_category);
  if (!s.category.empty()) {
    out += " of " + article(s.category) + " " + s.category;
    if (!sc.empty()) out += " (" + article(sc) + " " + sc + ")";
  } else if (!sc.empty()) {
    out += " of " + article(sc) + " " + sc;
  }
  out += " facing ";
  out += dataprep::pose_phrase(s.pose);
  std::vector<std::string> items;
  for (const auto& [name, n] : s.parts)
    if (n > 0) items.push_back(count_word(n) + " " + part_noun(name, n));
  if (!items.empty()) {
    out += ", with ";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
      out += items[i];
    }
  }
  return out + ".";
}

std::vector<std::pair<std::string, std::size_t>> count_parts(const imaging::LabelMap& labels,
                                                             const std::vector<std::string>& part_names) {
  std::map<int, std::size_t> counts;
  for (const auto& c : imaging::connected_components(labels)) ++counts[c.part_id];
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& [id, n] : counts) {
    const auto k = static_cast<std::size_t>(id);
    out.emplace_back(k >= 1 && k <= part_names.size() ? part_names[k - 1] : "part " + std::to_string(id), n);
  }
  return out;
}

}  // namespace sketchparse::describe
