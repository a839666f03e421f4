#include <gtest/gtest.h>

#include "sketchparse/describe/describe.hpp"

namespace sketchparse::describe {
namespace {

using dataprep::Pose;

TEST(Describe, CatFacingWest) {
  const SketchSummary s{"cat", "Small Animals", {{"head", 1}, {"body", 1}, {"leg", 4}, {"tail", 1}}, Pose::kW};
  EXPECT_EQ(describe(s),
            "This is a sketch of a cat (a Small Animal) facing west, with one head, one body, four legs and one tail.");
  EXPECT_EQ(describe(s), describe(s));
}

TEST(Describe, WordsPluralsAndPhrases) {
  EXPECT_EQ(count_word(1), "one");
  EXPECT_EQ(count_word(9), "nine");
  EXPECT_EQ(count_word(10), "10");
  EXPECT_EQ(part_noun("body", 2), "bodies");
  EXPECT_EQ(part_noun("leg", 3), "legs");
  EXPECT_EQ(part_noun("wheel", 2), "wheels");
  EXPECT_EQ(part_noun("wheel", 1), "wheel");
  EXPECT_EQ(singular("Four Wheelers"), "Four Wheeler");
  const SketchSummary s{"airplane", "Flying Things", {{"wing", 2}, {"engine", 12}}, Pose::kNE};
  EXPECT_EQ(describe(s),
            "This is a sketch of an airplane (a Flying Thing) facing north-east, with two wings and 12 engines.");
}

TEST(Describe, EmptyPartsAndUnknownCategory) {
  EXPECT_EQ(describe({"bus", "Four Wheelers", {}, Pose::kS}), "This is a sketch of a bus (a Four Wheeler) facing south.");
  EXPECT_EQ(describe({"", "", {{"wheel", 2}}, Pose::kE}), "This is a sketch facing east, with two wheels.");
  EXPECT_EQ(describe({"", "Animals", {}, Pose::kN}), "This is a sketch of an Animal facing north.");
}

TEST(Describe, EveryPartAppearsWithItsCount) {
  const SketchSummary s{"cow", "Large Animals", {{"head", 1}, {"leg", 4}, {"horn", 2}}, Pose::kSE};
  const auto text = describe(s);
  for (const char* w : {"cow", "south-east", "one head", "four legs", "two horns"})
    EXPECT_NE(text.find(w), std::string::npos) << w;
}

TEST(CountParts, ConnectedInstancesPerPart) {
  imaging::LabelMap m(7, 3);
  m.at(0, 0) = 1;
  m.at(2, 0) = 2;
  m.at(4, 0) = 2;
  m.at(6, 2) = 2;
  const auto c = count_parts(m, {"head", "leg"});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (std::pair<std::string, std::size_t>{"head", 1}));
  EXPECT_EQ(c[1], (std::pair<std::string, std::size_t>{"leg", 3}));
}

}  // namespace
}  // namespace sketchparse::describe
