#include <gtest/gtest.h>

#include <numeric>

#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/numcore/rng.hpp"
#include "sketchparse/parsenet/checkpoint.hpp"
#include "sketchparse/routercls/router.hpp"

namespace sketchparse::routercls {
namespace {

const std::filesystem::path kData = SKETCHPARSE_DATA_DIR;

imaging::Raster random_sketch(std::size_t w, std::size_t h, numcore::Rng& rng) {
  imaging::Raster r(w, h);
  for (auto& v : r.pixels()) v = rng.uniform() < 0.15 ? imaging::kInk : 0;
  return r;
}

RouterConfig small() {
  RouterConfig c;
  c.width_divisor = 8;
  return c;
}

TEST(Router, BuildGuardsAndShapes) {
  EXPECT_THROW(build_router(1, 0), ConfigError);
  RouterConfig bad;
  bad.width_divisor = 0;
  EXPECT_THROW(build_router(2, 0, bad), ConfigError);
  auto net = build_router(3, 1, small());
  EXPECT_EQ(net.convs.size(), 6u);
  EXPECT_EQ(net.convs[0].spec.kernel, 15u);
  EXPECT_EQ(net.convs[0].spec.stride, 3u);
  EXPECT_EQ(net.convs[5].spec.out_channels, 64u);
  EXPECT_EQ(net.out_w.value.shape(), (numcore::Shape{3, 64}));
  const auto full = build_router(2, 1);
  EXPECT_EQ(full.convs[0].spec.out_channels, 64u);
  EXPECT_EQ(full.convs[5].spec.out_channels, 512u);
}

TEST(Router, PooledScoresAreASimplexPointAndMirrorInvariant) {
  auto net = build_router(3, 4, small());
  numcore::Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_sketch(64 + 8 * trial, 64, rng);
    const auto a = classify_pooled(net, s);
    const auto b = classify_pooled(net, imaging::mirror_v(s));
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.branch, b.branch);
    EXPECT_NEAR(std::accumulate(a.scores.begin(), a.scores.end(), 0.0), 1.0, 1e-9);
    for (double p : a.scores) EXPECT_GE(p, 0.0);
    EXPECT_EQ(classify_pooled(net, s).scores, a.scores);
  }
}

TEST(Router, SingleViewIsPlainForward) {
  auto net = build_router(2, 5, small());
  numcore::Rng rng(9);
  const auto s = random_sketch(64, 64, rng);
  PoolingConfig single;
  single.multi_view = false;
  EXPECT_EQ(classify_pooled(net, s, single).scores, router_scores(net, s));
}

TEST(Router, DropoutOnlyWhileTraining) {
  auto net = build_router(2, 6, small());
  numcore::Rng rng(10);
  const auto x = parsenet::raster_tensor<float>(random_sketch(64, 64, rng));
  numcore::Tape<float> eval_tape;
  const auto a = router_forward(eval_tape, net, eval_tape.constant(x)).value();
  EXPECT_EQ(a, router_forward(eval_tape, net, eval_tape.constant(x)).value());
  numcore::Tape<float> train_tape(true, 3);
  EXPECT_NE(a, router_forward(train_tape, net, train_tape.constant(x)).value());
}

TEST(Router, CheckpointRoundTrip) {
  const auto tax = taxonomy::Taxonomy::load(kData / "animals_vehicles.tax");
  auto net = build_router(2, 7, small());
  net.digest = tax.digest();
  const auto path = std::filesystem::temp_directory_path() / "skp_router.ckpt";
  save_router(net, path);
  const auto back = load_router(path, tax);
  EXPECT_EQ(back.cfg.width_divisor, 8u);
  numcore::Rng rng(11);
  const auto s = random_sketch(64, 64, rng);
  EXPECT_EQ(classify_pooled(back, s).scores, classify_pooled(net, s).scores);
  const auto desk = taxonomy::Taxonomy::load(kData / "desk.tax");
  EXPECT_THROW(load_router(path, desk), parsenet::CheckpointError);
  EXPECT_THROW(parsenet::read_checkpoint(path, parsenet::kParserMagic), parsenet::CheckpointError);
}

}  // namespace
}  // namespace sketchparse::routercls
