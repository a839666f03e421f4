#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "sketchparse/interface/config.hpp"
#include "sketchparse/interface/pipeline.hpp"
#include "sketchparse/interface/selfcheck.hpp"
#include "sketchparse/parsenet/checkpoint.hpp"

namespace sketchparse::interface {
namespace {

namespace fs = std::filesystem;
const fs::path kData = SKETCHPARSE_DATA_DIR;
const std::string kCli = SKETCHPARSE_CLI;

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(RunConfig, DefaultsOverridesAndRejections) {
  const auto c = parse_run_config(R"({"taxonomy": "t.tax", "seed": 9,
      "parser": {"lambda": 0.5, "freeze": ["shared"]}, "router": {"width_divisor": 2}, "rerank": {"top": 10}})",
                                  "/base");
  EXPECT_EQ(c.taxonomy, fs::path("/base/t.tax"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.parser.seed, 9u);
  EXPECT_EQ(c.parser.lambda, 0.5);
  EXPECT_EQ(c.parser.lr_body, learn::TrainPlan::desk_default().lr_body);
  EXPECT_EQ(c.parser.freeze, std::vector<std::string>{"shared"});
  EXPECT_EQ(c.router.width_divisor, 2u);
  EXPECT_EQ(c.top, 10u);
  EXPECT_EQ(parse_run_config(R"({"parser": {"preset": "full"}})").parser.lr_body, 5e-4);

  EXPECT_THROW(parse_run_config(R"({"sed": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"parser": {"lamda": 1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"seed": "x"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"parser": {"lambda": -1}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), ConfigError);
}

TEST(Pipeline, FindSketchesAndIdenticalDirsScoreOne) {
  const auto tax = taxonomy::Taxonomy::load(kData / "desk.tax");
  const auto root = fresh_dir("skp_iface_corpus");
  dataprep::CorpusSpec spec;
  spec.taxonomy = &tax;
  spec.categories = {"cat", "car"};
  spec.per_category = 3;
  spec.seed = 4;
  dataprep::gen_corpus(spec, root);

  const auto s = find_sketches(root);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s[0].id, "car/0000");
  EXPECT_EQ(find_sketches(root / "cat/0001.sketch.pgm")[0].id, "0001");
  EXPECT_THROW(find_sketches(root / "missing"), ConfigError);

  const auto r = evaluate_dirs(root, root, tax, false);
  EXPECT_DOUBLE_EQ(r.iou.grand, 1.0);
  EXPECT_FALSE(r.pose.has_value());
  EXPECT_THROW(evaluate_dirs(fresh_dir("skp_iface_empty"), root, tax, false), ConfigError);

  std::ofstream(root / "ranking.txt") << "# best first\ncat/0001\n\ncar/0002\n";
  const auto ranked = load_ranking(root / "ranking.txt", root);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[1].id, "car/0002");
  std::ofstream(root / "bad.txt") << "cat/9999\n";
  EXPECT_THROW(load_ranking(root / "bad.txt", root), ConfigError);
}

TEST(Pipeline, InferStaysInBranchLabelSpaceAndIsDeterministic) {
  const auto tax = taxonomy::Taxonomy::load(kData / "desk.tax");
  const auto parser = parsenet::build_model(parsenet::ModelConfig::desk_default(), tax, 3);
  auto router = routercls::build_router(tax.branch_count(), 3, {16, 0.7});
  router.digest = tax.digest();
  const Pipeline p{&tax, &parser, &router, {}};
  const auto fig = dataprep::draw_figure(tax, "bus", 8);
  const auto sketch = dataprep::sketchify(fig.photo, fig.labels);
  const std::size_t bus = tax.branch_of("bus");
  const auto a = infer_sketch(p, "x", sketch, bus);
  for (auto v : a.labels.pixels()) EXPECT_LE(v, 3);
  EXPECT_TRUE(a.record.forced);
  EXPECT_EQ(a.record.supercategory, "Four Wheelers");
  EXPECT_EQ(a.record.router_scores.size(), 4u);
  const auto b = infer_sketch(p, "x", sketch, bus);
  EXPECT_EQ(record_json(a.record, tax), record_json(b.record, tax));
  EXPECT_NE(record_json(a.record, tax).find("\"format_version\": 1"), std::string::npos);

  const auto routed = infer_sketch(p, "x", sketch);
  EXPECT_FALSE(routed.record.forced);
  EXPECT_LT(routed.record.branch, 4u);

  const Pipeline no_router{&tax, &parser, nullptr, {}};
  EXPECT_THROW(infer_sketch(no_router, "x", sketch), ConfigError);
  const auto other = taxonomy::Taxonomy::load(kData / "animals_vehicles.tax");
  const Pipeline wrong{&other, &parser, nullptr, {}};
  EXPECT_THROW(infer_sketch(wrong, "x", sketch, 0), parsenet::CheckpointError);
}

TEST(Selfcheck, AllChecksPass) {
  for (const auto& r : run_selfcheck(1)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Cli, ExitCodesAndByteIdenticalCorpus) {
  EXPECT_EQ(run("selfcheck"), 0);
  EXPECT_EQ(run("selfcheck --no-such-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  const auto dir = fresh_dir("skp_iface_cli");
  const std::string tax = (kData / "desk.tax").string();
  EXPECT_EQ(run("gen-corpus --taxonomy " + tax + " --categories unicorn --out " + (dir / "x").string()), 1);
  EXPECT_EQ(run("gen-corpus --taxonomy /nonexistent.tax --out " + (dir / "x").string()), 1);
  for (const char* sub : {"a", "b"}) {
    EXPECT_EQ(run("gen-corpus --taxonomy " + tax + " --categories cow,bus --per-category 2 --seed 6 --out " +
                  (dir / sub).string()),
              0);
  }
  EXPECT_EQ(slurp(dir / "a/cow/0001.sketch.pgm"), slurp(dir / "b/cow/0001.sketch.pgm"));
  EXPECT_EQ(slurp(dir / "a/poses.csv"), slurp(dir / "b/poses.csv"));
}

}  // namespace
}  // namespace sketchparse::interface
