#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sketchparse::taxonomy {

/// Malformed taxonomy text; the message carries the line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("taxonomy line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Category {
  std::string name;
  std::vector<std::string> parts;
};

/// One expert branch. Part ids are 1..parts.size() in first-seen order; 0 is
/// the global background id and never listed.
struct Branch {
  std::string name;
  std::vector<Category> categories;
  std::vector<std::string> parts;
};

using Digest = std::array<std::uint8_t, 32>;

/// Categories grouped into disjoint super-categories. Immutable after parsing.
///
/// Grammar (line based, '#' starts a comment):
///   super <name>
///   cat <name> : part, part, ...
class Taxonomy {
 public:
  static Taxonomy parse(std::string_view text);
  static Taxonomy load(const std::filesystem::path& path);

  std::size_t branch_count() const { return branches_.size(); }
  std::size_t category_count() const;
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch& branch(std::size_t i) const { return branches_.at(i); }

  std::optional<std::size_t> find_branch(std::string_view name) const;
  std::size_t branch_index(std::string_view name) const;
  /// Branch holding `category`; throws std::out_of_range when unknown.
  std::size_t branch_of(std::string_view category) const;
  const Category& category(std::string_view name) const;

  std::size_t part_count(std::size_t branch) const { return branches_.at(branch).parts.size(); }
  /// 1-based id of `part` in `branch`, or nullopt.
  std::optional<int> part_id(std::size_t branch, std::string_view part) const;
  const std::string& part_name(std::size_t branch, int id) const;

  /// Normalized text form; equal taxonomies give equal text.
  std::string canonical_text() const;
  /// SHA-256 of canonical_text().
  Digest digest() const;

 private:
  std::vector<Branch> branches_;
};

std::string digest_hex(const Digest& d);

enum class Similarity { kJaccard, kIntersection };

using PartSets = std::map<std::string, std::set<std::string>>;

/// Greedy agglomerative grouping of categories into k clusters. A cluster's
/// part set is the union of its members' sets; the most similar pair is merged
/// until k clusters remain. Ties go to the lexicographically smallest pair of
/// cluster names (a cluster's name is its sorted members joined by '+').
/// Returns clusters with sorted members, ordered by name.
std::vector<std::vector<std::string>> cluster_supercategories(const PartSets& parts, std::size_t k,
                                                              Similarity sim = Similarity::kJaccard);

struct Assignment {
  std::string supercategory;
  std::size_t shared_parts = 0;
  /// Set when no branch shares any part with the new category.
  bool no_overlap = false;
};

/// Super-category sharing the most part names with `parts` (raw intersection
/// count), ties broken by name.
Assignment assign_new_category(const Taxonomy& t, const std::set<std::string>& parts);

}  // namespace sketchparse::taxonomy
