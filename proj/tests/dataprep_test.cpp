#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "sketchparse/dataprep/dataprep.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::dataprep {
namespace {

const std::filesystem::path kData = SKETCHPARSE_DATA_DIR;

std::set<int> ids(const LabelMap& m) { return {m.pixels().begin(), m.pixels().end()}; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Pose, MirrorIsAnInvolutionWithFixedMeridian) {
  EXPECT_EQ(mirror_pose(Pose::kE), Pose::kW);
  EXPECT_EQ(mirror_pose(Pose::kNE), Pose::kNW);
  EXPECT_EQ(mirror_pose(Pose::kSE), Pose::kSW);
  EXPECT_EQ(mirror_pose(Pose::kN), Pose::kN);
  EXPECT_EQ(mirror_pose(Pose::kS), Pose::kS);
  for (Pose p : kAllPoses) {
    EXPECT_EQ(mirror_pose(mirror_pose(p)), p);
    EXPECT_EQ(pose_dx(mirror_pose(p)), -pose_dx(p));
    EXPECT_EQ(parse_pose(pose_name(p)), p);
  }
  EXPECT_THROW(parse_pose("NNE"), ContractViolation);
}

TEST(Sketchify, BlankPhotoSquareLabelGivesDilatedOutline) {
  Raster photo(20, 20, 128);
  LabelMap labels(20, 20);
  for (std::size_t y = 5; y < 15; ++y)
    for (std::size_t x = 5; x < 15; ++x) labels.at(x, y) = 1;
  const Raster s = sketchify(photo, labels);
  const Raster expect = imaging::dilate_square(imaging::label_boundaries(labels), 3);
  EXPECT_EQ(s, expect);
  EXPECT_FALSE(s.at(10, 10));  // interior stays blank
  EXPECT_TRUE(s.at(3, 10));    // one pixel of dilation beyond the outer contour
  EXPECT_FALSE(s.at(2, 10));
  EXPECT_THROW(sketchify(photo, LabelMap(19, 20)), ContractViolation);
}

TEST(Sketchify, ContainsDilatedCanny) {
  numcore::Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Raster photo(40, 40);
    for (auto& v : photo.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
    LabelMap labels(40, 40);
    for (auto& v : labels.pixels()) v = rng.uniform() < 0.05 ? 1 : 0;
    const Raster s = sketchify(photo, labels);
    const Raster e = imaging::dilate_square(imaging::canny(photo), 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (e[i]) {
        ASSERT_TRUE(s[i]);
      }
    }
  }
}

TEST(Augment, SegFamilyHasFourteenVariants) {
  const auto t = taxonomy::Taxonomy::load(kData / "desk.tax");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto f = draw_figure(t, "dog", seed);
    const PairedSample p{sketchify(f.photo, f.labels), f.labels, "dog", f.pose};
    const auto v = augment_seg(p);
    ASSERT_EQ(v.size(), 14u);
    EXPECT_EQ(v[0].sketch, p.sketch);
    EXPECT_EQ(v[0].labels, p.labels);
    const auto in_ids = ids(p.labels);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_TRUE(v[i].sketch.same_size(p.sketch));
      for (int id : ids(v[i].labels)) EXPECT_TRUE(in_ids.count(id)) << "variant " << i;
      EXPECT_EQ(v[i].pose, i < 7 ? p.pose : mirror_pose(p.pose));
    }
    EXPECT_EQ(v[7].labels, imaging::mirror_v(p.labels));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto one = augment_seg_variant(p, i);
      EXPECT_EQ(one.sketch, v[i].sketch);
      EXPECT_EQ(one.labels, v[i].labels);
      EXPECT_EQ(one.pose, v[i].pose);
    }
  }
}

TEST(Augment, ClsFamilyHasSeventyVariants) {
  numcore::Rng rng(9);
  Raster r(48, 40);
  for (auto& v : r.pixels()) v = rng.uniform() < 0.2 ? imaging::kInk : 0;
  const auto v = augment_cls(r);
  ASSERT_EQ(v.size(), 70u);
  EXPECT_EQ(v[0], r);
  for (const auto& x : v) EXPECT_TRUE(x.same_size(r));
  EXPECT_EQ(v[35], imaging::mirror_v(r));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(augment_cls_variant(r, i), v[i]) << i;
}

TEST(Corpus, CountsLabelsAndByteIdenticalRegeneration) {
  const auto t = taxonomy::Taxonomy::load(kData / "desk.tax");
  const auto a = std::filesystem::temp_directory_path() / "skp_corpus_a";
  const auto b = std::filesystem::temp_directory_path() / "skp_corpus_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  CorpusSpec spec;
  spec.taxonomy = &t;
  spec.categories = {"cat", "cow", "bird", "car"};
  spec.per_category = 10;
  spec.seed = 17;
  EXPECT_EQ(gen_corpus(spec, a), 40u);
  gen_corpus(spec, b);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
  }
  EXPECT_EQ(files, 81u);  // 40 pairs + poses.csv

  const auto items = load_dataset(a, t);
  ASSERT_EQ(items.size(), 40u);
  for (const auto& it : items) {
    const auto n = static_cast<int>(t.part_count(it.branch));
    for (int id : ids(it.sample.labels)) EXPECT_LE(id, n);
    EXPECT_GT(imaging::count_nonzero(it.sample.labels), 0u);
  }
  EXPECT_EQ(items[0].id, "cat/0000");

  spec.seed = 18;
  gen_corpus(spec, b);
  EXPECT_NE(slurp(a / "cat/0000.sketch.pgm"), slurp(b / "cat/0000.sketch.pgm"));
}

TEST(Corpus, UnknownTemplateOrPartIsAConfigError) {
  const auto t = taxonomy::Taxonomy::parse("super X\ncat unicorn : head, body\ncat cat : head, body\n");
  EXPECT_THROW(draw_figure(t, "unicorn", 1), ConfigError);
  EXPECT_THROW(draw_figure(t, "cat", 1), ConfigError);  // template needs a leg part
  CorpusSpec spec;
  spec.taxonomy = &t;
  spec.categories = {"unicorn"};
  EXPECT_THROW(gen_corpus(spec, std::filesystem::temp_directory_path() / "skp_bad"), ConfigError);
}

TEST(Corpus, PascalTaxonomyTemplatesResolveAliases) {
  const auto t = taxonomy::Taxonomy::load(kData / "pascal_parts.tax");
  for (const auto& name : template_names()) {
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
      const auto f = draw_figure(t, name, seed);
      const auto n = static_cast<int>(t.part_count(t.branch_of(name)));
      for (int id : ids(f.labels)) EXPECT_LE(id, n) << name;
    }
  }
}

}  // namespace
}  // namespace sketchparse::dataprep
