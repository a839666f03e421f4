#include <gtest/gtest.h>

#include <algorithm>

#include "sketchparse/numcore/tensor.hpp"
#include "sketchparse/taxonomy/taxonomy.hpp"

#ifndef SKETCHPARSE_DATA_DIR
#error "SKETCHPARSE_DATA_DIR must be defined"
#endif

namespace sketchparse::taxonomy {
namespace {

const std::filesystem::path kData = SKETCHPARSE_DATA_DIR;

PartSets part_sets(const Taxonomy& t) {
  PartSets out;
  for (const auto& b : t.branches())
    for (const auto& c : b.categories) out[c.name] = {c.parts.begin(), c.parts.end()};
  return out;
}

TEST(Load, PascalTaxonomyShape) {
  const auto t = Taxonomy::load(kData / "pascal_parts.tax");
  EXPECT_EQ(t.branch_count(), 5u);
  EXPECT_EQ(t.category_count(), 11u);
  EXPECT_EQ(t.branch_of("sheep"), t.branch_index("Small Animals"));
}

TEST(Load, SingleCategoryIds) {
  const auto t = Taxonomy::parse("super S\ncat thing : head, body\n");
  EXPECT_EQ(t.part_count(0), 2u);
  EXPECT_EQ(t.part_id(0, "head"), 1);
  EXPECT_EQ(t.part_id(0, "body"), 2);
  EXPECT_EQ(t.part_id(0, "tail"), std::nullopt);
  EXPECT_EQ(t.part_name(0, 2), "body");
  EXPECT_THROW(t.part_name(0, 0), ContractViolation);
}

TEST(Load, SharedPartHasOneId) {
  const auto t = Taxonomy::parse(
      "# comment\nsuper Large Animals\ncat cow : head, tail, horn  # trailing\ncat horse : head, tail, mane\n");
  EXPECT_EQ(t.part_count(0), 4u);
  EXPECT_EQ(t.part_id(0, "tail"), 2);
  EXPECT_EQ(t.part_id(0, "mane"), 4);
  // Ids form a bijection onto 1..n.
  for (int id = 1; id <= 4; ++id) EXPECT_EQ(t.part_id(0, t.part_name(0, id)), id);
}

TEST(Load, ErrorsCarryLineNumbers) {
  auto line_of = [](const char* text) {
    try {
      Taxonomy::parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("super A\ncat x : a\ncat x : b\n"), 3u);
  EXPECT_EQ(line_of("super A\ncat x : a\nsuper B\ncat x : a\n"), 4u);
  EXPECT_EQ(line_of("super A\n\ncat x :\n"), 3u);
  EXPECT_EQ(line_of("cat x : a\n"), 1u);
  EXPECT_EQ(line_of("super A\nfoo bar\n"), 2u);
  EXPECT_EQ(line_of("super A\nsuper B\ncat x : a\n"), 2u);
}

TEST(Load, DigestTracksContent) {
  const auto a = Taxonomy::parse("super A\ncat x : a, b\n");
  const auto b = Taxonomy::parse("super   A\n# c\ncat x:a,b\n");
  const auto c = Taxonomy::parse("super A\ncat x : b, a\n");
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(a.digest(), c.digest());
  EXPECT_EQ(digest_hex(a.digest()).size(), 64u);
}

TEST(Cluster, BirdJoinsAirplaneAndPascalGroupsRecovered) {
  const auto t = Taxonomy::load(kData / "pascal_parts.tax");
  const auto groups = cluster_supercategories(part_sets(t), 5);
  ASSERT_EQ(groups.size(), 5u);
  for (const auto& g : groups) {
    // Every recovered cluster is exactly one declared super-category.
    const std::size_t b = t.branch_of(g.front());
    EXPECT_EQ(g.size(), t.branch(b).categories.size());
    for (const auto& c : g) EXPECT_EQ(t.branch_of(c), b);
  }
  // With one merge left per pair, bird's nearest neighbour is airplane.
  const auto six = cluster_supercategories(part_sets(t), 6);
  const auto has = [](const std::vector<std::string>& g, const char* n) {
    return std::find(g.begin(), g.end(), n) != g.end();
  };
  bool bird_alone = false;
  for (const auto& g : six) bird_alone = bird_alone || (has(g, "bird") && g.size() == 1);
  EXPECT_TRUE(bird_alone);
  for (const auto& g : groups) {
    if (has(g, "bird")) {
      EXPECT_TRUE(has(g, "airplane"));
    }
  }
}

TEST(Cluster, SingletonsAndGuards) {
  PartSets p{{"a", {"x"}}, {"b", {"y"}}, {"c", {"x", "y"}}};
  const auto g = cluster_supercategories(p, 3);
  EXPECT_EQ(g, (std::vector<std::vector<std::string>>{{"a"}, {"b"}, {"c"}}));
  EXPECT_THROW(cluster_supercategories(p, 0), ContractViolation);
  EXPECT_THROW(cluster_supercategories(p, 4), ContractViolation);
  // Tie between (a,c) and (b,c): lexicographically smaller pair wins.
  const auto two = cluster_supercategories(p, 2);
  EXPECT_EQ(two, (std::vector<std::vector<std::string>>{{"a", "c"}, {"b"}}));
}

TEST(Cluster, IdenticalSetsMergeFirst) {
  // Exhaustive oracle: for each k, any identical pair that exists at the
  // moment of a non-identical merge must already be merged.
  PartSets p{{"p", {"a", "b"}}, {"q", {"a", "b"}}, {"r", {"a", "c"}}, {"s", {"c", "d"}},
             {"t", {"c", "d"}}, {"u", {"a", "b", "c"}}};
  // Two identical pairs exist; after 2 merges both must be joined.
  const auto g = cluster_supercategories(p, 4);
  auto together = [&](const char* x, const char* y) {
    for (const auto& c : g)
      if (std::find(c.begin(), c.end(), x) != c.end()) return std::find(c.begin(), c.end(), y) != c.end();
    return false;
  };
  EXPECT_TRUE(together("p", "q"));
  EXPECT_TRUE(together("s", "t"));
  EXPECT_EQ(cluster_supercategories(p, 4), g);  // deterministic
}

TEST(Assign, ExactIntersectionAndDegenerate) {
  const auto t = Taxonomy::load(kData / "pascal_parts.tax");
  const auto& large = t.branch(t.branch_index("Large Animals"));
  const auto same = assign_new_category(t, {large.parts.begin(), large.parts.end()});
  EXPECT_EQ(same.supercategory, "Large Animals");
  EXPECT_FALSE(same.no_overlap);

  const auto none = assign_new_category(t, {"antenna", "fin"});
  EXPECT_TRUE(none.no_overlap);
  EXPECT_EQ(none.supercategory, "Flying Things");  // lexicographically first

  // Counted-intersection oracle: elephant-like parts.
  const std::set<std::string> elephant{"head", "body", "leg", "tail", "trunk"};
  std::size_t best = 0;
  std::string expect;
  std::vector<std::string> names;
  for (const auto& b : t.branches()) names.push_back(b.name);
  std::sort(names.begin(), names.end());
  for (const auto& n : names) {
    const auto& parts = t.branch(t.branch_index(n)).parts;
    const auto c = static_cast<std::size_t>(
        std::count_if(parts.begin(), parts.end(), [&](const auto& p) { return elephant.count(p); }));
    if (c > best) {
      best = c;
      expect = n;
    }
  }
  const auto got = assign_new_category(t, elephant);
  EXPECT_EQ(got.supercategory, expect);
  EXPECT_EQ(got.supercategory, "Small Animals");
  EXPECT_EQ(got.shared_parts, 4u);
}

}  // namespace
}  // namespace sketchparse::taxonomy
