#include "sketchparse/taxonomy/taxonomy.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sketchparse/numcore/tensor.hpp"

namespace sketchparse::taxonomy {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_parts(std::string_view list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto end = comma == std::string_view::npos ? list.size() : comma;
    out.push_back(trim(list.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Taxonomy Taxonomy::parse(std::string_view text) {
  Taxonomy t;
  std::set<std::string> seen_categories;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto space = content.find_first_of(" \t");
    const std::string keyword = content.substr(0, space);
    const std::string rest = space == std::string::npos ? "" : trim(content.substr(space));
    if (keyword == "super") {
      if (rest.empty()) throw ParseError(line_no, "super-category needs a name");
      if (t.find_branch(rest)) throw ParseError(line_no, "duplicate super-category '" + rest + "'");
      if (!t.branches_.empty() && t.branches_.back().categories.empty()) {
        throw ParseError(line_no, "super-category '" + t.branches_.back().name + "' has no categories");
      }
      t.branches_.push_back(Branch{rest, {}, {}});
    } else if (keyword == "cat") {
      if (t.branches_.empty()) throw ParseError(line_no, "category outside a super block");
      const auto colon = rest.find(':');
      if (colon == std::string::npos) throw ParseError(line_no, "expected 'cat <name> : parts'");
      Category cat{trim(std::string_view(rest).substr(0, colon)), {}};
      if (cat.name.empty()) throw ParseError(line_no, "category needs a name");
      if (!seen_categories.insert(cat.name).second) {
        throw ParseError(line_no, "category '" + cat.name + "' declared twice");
      }
      const std::string list = trim(std::string_view(rest).substr(colon + 1));
      if (list.empty()) throw ParseError(line_no, "category '" + cat.name + "' has an empty part list");
      for (auto& part : split_parts(list)) {
        if (part.empty()) throw ParseError(line_no, "empty part name in '" + cat.name + "'");
        if (std::find(cat.parts.begin(), cat.parts.end(), part) != cat.parts.end()) {
          throw ParseError(line_no, "part '" + part + "' repeated in '" + cat.name + "'");
        }
        cat.parts.push_back(part);
      }
      Branch& b = t.branches_.back();
      for (const auto& part : cat.parts) {
        if (std::find(b.parts.begin(), b.parts.end(), part) == b.parts.end()) b.parts.push_back(part);
      }
      if (b.parts.size() > 254) throw ParseError(line_no, "more than 254 parts in one branch");
      b.categories.push_back(std::move(cat));
    } else {
      throw ParseError(line_no, "unknown directive '" + keyword + "'");
    }
  }
  if (t.branches_.empty()) throw ParseError(line_no, "no super-categories defined");
  if (t.branches_.back().categories.empty()) {
    throw ParseError(line_no, "super-category '" + t.branches_.back().name + "' has no categories");
  }
  return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t Taxonomy::category_count() const {
  std::size_t n = 0;
  for (const auto& b : branches_) n += b.categories.size();
  return n;
}

std::optional<std::size_t> Taxonomy::find_branch(std::string_view name) const {
  for (std::size_t i = 0; i < branches_.size(); ++i)
    if (branches_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Taxonomy::branch_index(std::string_view name) const {
  if (auto i = find_branch(name)) return *i;
  throw std::out_of_range("unknown super-category '" + std::string(name) + "'");
}

std::size_t Taxonomy::branch_of(std::string_view category) const {
  for (std::size_t i = 0; i < branches_.size(); ++i)
    for (const auto& c : branches_[i].categories)
      if (c.name == category) return i;
  throw std::out_of_range("unknown category '" + std::string(category) + "'");
}

const Category& Taxonomy::category(std::string_view name) const {
  for (const auto& b : branches_)
    for (const auto& c : b.categories)
      if (c.name == name) return c;
  throw std::out_of_range("unknown category '" + std::string(name) + "'");
}

std::optional<int> Taxonomy::part_id(std::size_t branch, std::string_view part) const {
  const auto& parts = branches_.at(branch).parts;
  const auto it = std::find(parts.begin(), parts.end(), part);
  if (it == parts.end()) return std::nullopt;
  return static_cast<int>(it - parts.begin()) + 1;
}

const std::string& Taxonomy::part_name(std::size_t branch, int id) const {
  const auto& parts = branches_.at(branch).parts;
  if (id < 1 || static_cast<std::size_t>(id) > parts.size()) {
    throw ContractViolation("part id " + std::to_string(id) + " outside branch '" +
                            branches_.at(branch).name + "'");
  }
  return parts[id - 1];
}

std::string Taxonomy::canonical_text() const {
  std::string out;
  for (const auto& b : branches_) {
    out += "super " + b.name + "\n";
    for (const auto& c : b.categories) {
      out += "cat " + c.name + " :";
      for (std::size_t i = 0; i < c.parts.size(); ++i) out += (i ? ", " : " ") + c.parts[i];
      out += "\n";
    }
  }
  return out;
}

Digest Taxonomy::digest() const {
  const std::string text = canonical_text();
  Digest d{};
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), d.data());
  return d;
}

std::string digest_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto b : d) {
    s += kHex[b >> 4];
    s += kHex[b & 15];
  }
  return s;
}

std::vector<std::vector<std::string>> cluster_supercategories(const PartSets& parts, std::size_t k,
                                                              Similarity sim) {
  if (k < 1) throw ContractViolation("cluster_supercategories: k must be >= 1");
  if (k > parts.size()) {
    throw ContractViolation("cluster_supercategories: k=" + std::to_string(k) + " exceeds " +
                            std::to_string(parts.size()) + " categories");
  }
  struct Cluster {
    std::vector<std::string> members;  // sorted
    std::set<std::string> parts;
    std::string name;
  };
  std::vector<Cluster> clusters;
  for (const auto& [name, set] : parts) clusters.push_back({{name}, set, name});

  // Similarity as an exact fraction num/den so ties are detected exactly.
  auto score = [&](const Cluster& a, const Cluster& b) {
    std::size_t common = 0;
    for (const auto& p : a.parts) common += b.parts.count(p);
    const std::size_t uni = a.parts.size() + b.parts.size() - common;
    if (sim == Similarity::kIntersection) return std::pair<std::size_t, std::size_t>{common, 1};
    return std::pair<std::size_t, std::size_t>{common, std::max<std::size_t>(uni, 1)};
  };

  while (clusters.size() > k) {
    std::size_t best_i = 0, best_j = 1;
    auto best = score(clusters[0], clusters[1]);
    auto better = [&](std::size_t i, std::size_t j, std::pair<std::size_t, std::size_t> s) {
      const auto lhs = s.first * best.second, rhs = best.first * s.second;
      if (lhs != rhs) return lhs > rhs;
      const auto key = std::minmax(clusters[i].name, clusters[j].name);
      const auto best_key = std::minmax(clusters[best_i].name, clusters[best_j].name);
      return key < best_key;
    };
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const auto s = score(clusters[i], clusters[j]);
        if (better(i, j, s)) {
          best = s;
          best_i = i;
          best_j = j;
        }
      }
    Cluster merged = clusters[best_i];
    merged.members.insert(merged.members.end(), clusters[best_j].members.begin(),
                          clusters[best_j].members.end());
    std::sort(merged.members.begin(), merged.members.end());
    merged.parts.insert(clusters[best_j].parts.begin(), clusters[best_j].parts.end());
    merged.name.clear();
    for (std::size_t m = 0; m < merged.members.size(); ++m) merged.name += (m ? "+" : "") + merged.members[m];
    clusters.erase(clusters.begin() + static_cast<long>(best_j));
    clusters[best_i] = std::move(merged);
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.name < b.name; });
  std::vector<std::vector<std::string>> out;
  for (auto& c : clusters) out.push_back(std::move(c.members));
  return out;
}

Assignment assign_new_category(const Taxonomy& t, const std::set<std::string>& parts) {
  if (parts.empty()) throw ContractViolation("assign_new_category: empty part set");
  std::vector<const Branch*> order;
  for (const auto& b : t.branches()) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const Branch* a, const Branch* b) { return a->name < b->name; });
  Assignment best{order.front()->name, 0, true};
  bool first = true;
  for (const Branch* b : order) {
    std::size_t common = 0;
    for (const auto& p : b->parts) common += parts.count(p);
    if (first || common > best.shared_parts) {
      best = {b->name, common, common == 0};
      first = false;
    }
  }
  return best;
}

}  // namespace sketchparse::taxonomy
