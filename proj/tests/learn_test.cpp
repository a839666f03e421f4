#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/learn/learn.hpp"
#include "sketchparse/numcore/gradcheck.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::learn {
namespace {

using imaging::LabelMap;
using numcore::Tape;

LabelMap filled(std::size_t w, std::size_t h, std::uint8_t v) {
  LabelMap m(w, h);
  for (auto& p : m.pixels()) p = v;
  return m;
}

TEST(Balance, TwoPartExampleWithEvenMedian) {
  LabelMap second = filled(10, 11, 0);
  for (std::size_t i = 100; i < 110; ++i) second[i] = 1;
  const auto b = compute_class_balance({filled(10, 10, 0), second}, {"A", "B"});
  EXPECT_DOUBLE_EQ(b.frequency[0], 100.0);
  EXPECT_DOUBLE_EQ(b.frequency[1], 10.0);
  EXPECT_DOUBLE_EQ(b.median, 55.0);
  EXPECT_DOUBLE_EQ(b.alpha[0], 0.55);
  EXPECT_DOUBLE_EQ(b.alpha[1], 5.5);
}

TEST(Balance, EqualFrequenciesGiveUnitWeights) {
  LabelMap m(4, 4);
  for (std::size_t i = 0; i < 16; ++i) m[i] = static_cast<std::uint8_t>(i % 4);
  const auto b = compute_class_balance({m, m}, {"bg", "a", "b", "c"});
  for (double a : b.alpha) EXPECT_EQ(a, 1.0);
}

TEST(Balance, MissingLabelIsNamed) {
  try {
    compute_class_balance({filled(3, 3, 0)}, {"background", "tail"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("tail"), std::string::npos);
  }
}

struct Toy {
  std::vector<LabelMap> maps;
  std::vector<std::string> names;
};

Toy random_toy(numcore::Rng& rng) {
  Toy t;
  const std::size_t L = 2 + rng.below(6);
  for (std::size_t c = 0; c < L; ++c) t.names.push_back("l" + std::to_string(c));
  const std::size_t n = 1 + rng.below(6);
  for (std::size_t i = 0; i < n; ++i) {
    LabelMap m(3 + rng.below(6), 3 + rng.below(6));
    for (auto& v : m.pixels()) v = static_cast<std::uint8_t>(rng.below(L));
    t.maps.push_back(m);
  }
  // Guarantee every label shows up somewhere.
  for (std::size_t c = 0; c < L; ++c) t.maps[rng.below(n)][c] = static_cast<std::uint8_t>(c);
  return t;
}

TEST(Balance, MatchesBruteForceOracleOnRandomToys) {
  numcore::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto toy = random_toy(rng);
    std::map<int, std::size_t> pixels;
    std::map<int, std::set<std::size_t>> images;
    for (std::size_t i = 0; i < toy.maps.size(); ++i) {
      for (auto v : toy.maps[i].pixels()) {
        ++pixels[v];
        images[v].insert(i);
      }
    }
    std::vector<double> f;
    for (std::size_t c = 0; c < toy.names.size(); ++c)
      f.push_back(static_cast<double>(pixels[c]) / static_cast<double>(images[c].size()));
    std::vector<double> s = f;
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    const double hi = s[s.size() / 2];
    double M = hi;
    if (s.size() % 2 == 0) M = (*std::max_element(s.begin(), s.begin() + s.size() / 2) + hi) / 2.0;

    const auto b = compute_class_balance(toy.maps, toy.names);
    ASSERT_EQ(b.frequency, f);
    ASSERT_EQ(b.median, M);
    for (std::size_t c = 0; c < f.size(); ++c) ASSERT_EQ(b.alpha[c], M / f[c]);
  }
}

TEST(Balance, MedianMonotoneAndScaleProperties) {
  numcore::Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto toy = random_toy(rng);
    const auto b = compute_class_balance(toy.maps, toy.names);
    std::vector<std::size_t> order(b.frequency.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return b.frequency[x] < b.frequency[y]; });
    const std::size_t L = order.size();
    if (L % 2 == 1) {
      EXPECT_EQ(b.alpha[order[L / 2]], 1.0);
    } else {
      const double lo = b.alpha[order[L / 2 - 1]], hi = b.alpha[order[L / 2]];
      EXPECT_GE(lo, 1.0);
      EXPECT_LE(hi, 1.0);
      EXPECT_NEAR(1.0 / lo + 1.0 / hi, 2.0, 1e-12);
    }
    for (std::size_t i = 0; i + 1 < L; ++i) {
      if (b.frequency[order[i]] < b.frequency[order[i + 1]]) {
        EXPECT_GT(b.alpha[order[i]], b.alpha[order[i + 1]]);
      }
    }
    // Doubling every map side multiplies all pixel counts by 4.
    std::vector<LabelMap> big;
    for (const auto& m : toy.maps) {
      LabelMap d(2 * m.width(), 2 * m.height());
      for (std::size_t y = 0; y < d.height(); ++y)
        for (std::size_t x = 0; x < d.width(); ++x) d.at(x, y) = m.at(x / 2, y / 2);
      big.push_back(d);
    }
    const auto b4 = compute_class_balance(big, toy.names);
    for (std::size_t c = 0; c < L; ++c) EXPECT_EQ(b4.alpha[c], b.alpha[c]);
  }
}

TEST(Balance, PartOnlyModeKeepsBackgroundAtOne) {
  const auto tax = taxonomy::Taxonomy::parse("super A\ncat a : head, body, tail\n");
  dataprep::DatasetItem item;
  item.branch = 0;
  item.sample.labels = filled(10, 10, 0);
  for (std::size_t i = 0; i < 30; ++i) item.sample.labels[i] = 1;       // head 30
  for (std::size_t i = 30; i < 80; ++i) item.sample.labels[i] = 2;      // body 50
  for (std::size_t i = 80; i < 85; ++i) item.sample.labels[i] = 3;      // tail 5
  const std::vector<dataprep::DatasetItem> items{item};
  const auto with_bg = compute_class_balance(items, tax, 0, true);
  EXPECT_DOUBLE_EQ(with_bg.median, 22.5);  // {5, 15, 30, 50}
  const auto parts = compute_class_balance(items, tax, 0, false);
  EXPECT_DOUBLE_EQ(parts.median, 30.0);  // {5, 30, 50}
  EXPECT_EQ(parts.alpha[0], 1.0);
  EXPECT_DOUBLE_EQ(parts.alpha[1], 1.0);
  EXPECT_DOUBLE_EQ(parts.alpha[2], 0.6);
  EXPECT_DOUBLE_EQ(parts.alpha[3], 6.0);
  EXPECT_EQ(parts.frequency, with_bg.frequency);

  // A part missing from the corpus keeps weight 1 and no frequency.
  const auto wide = taxonomy::Taxonomy::parse("super A\ncat a : head, body, tail\ncat z : head, wing\n");
  const auto missing = compute_class_balance(items, wide, 0, false);
  ASSERT_EQ(missing.alpha.size(), 5u);
  EXPECT_DOUBLE_EQ(missing.median, 30.0);
  EXPECT_EQ(missing.alpha[4], 1.0);
  EXPECT_EQ(missing.frequency[4], 0.0);
  EXPECT_DOUBLE_EQ(missing.alpha[3], 6.0);
}

parsenet::ModelConfig tiny_config() {
  parsenet::ModelConfig c;
  c.trunk = {parsenet::TrunkLayer::make_conv(3, 1, 1, 3), parsenet::TrunkLayer::make_conv(3, 2, 1, 4),
             parsenet::TrunkLayer::make_conv(3, 1, 2, 4)};
  c.split_index = 2;
  c.pose.first = {3, 2, 2, 3, std::nullopt};
  c.pose.second = {3, 2, 2, 3, std::nullopt};
  c.pose.templ = {3, 1, 1, 3, std::nullopt};
  return c;
}

taxonomy::Taxonomy toy_taxonomy() {
  return taxonomy::Taxonomy::parse("super A\ncat a : head, body\nsuper B\ncat b : wheel, window, door\n");
}

TEST(TotalLoss, LambdaZeroAndPerfectPrediction) {
  Tape<double> tape;
  numcore::TensorD scores({3, 2, 2}), pose({8});
  LabelMap labels(2, 2);
  labels[0] = 1;
  labels[3] = 2;
  for (std::size_t i = 0; i < 4; ++i) scores[labels[i] * 4 + i] = 60.0;
  pose[3] = 60.0;
  const std::vector<double> alpha{1.0, 2.0, 0.5};
  const auto a = total_loss(tape.input(scores), labels, alpha, tape.input(pose), dataprep::Pose::kSE, 0.0);
  EXPECT_EQ(a.total.value()[0], a.seg.value()[0]);
  EXPECT_LT(a.total.value()[0], 1e-12);
  const auto b = total_loss(tape.input(scores), labels, alpha, tape.input(pose), dataprep::Pose::kN, 1.0);
  EXPECT_NEAR(b.total.value()[0], b.seg.value()[0] + 60.0, 1e-9);
  EXPECT_THROW(total_loss(tape.input(scores), LabelMap(3, 2), alpha, tape.input(pose), dataprep::Pose::kN, 1.0),
               ContractViolation);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  const auto tax = toy_taxonomy();
  numcore::Rng rng(21);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto m = parsenet::build_model(tiny_config(), tax, seed).cast<double>();
    const std::size_t branch = seed % 2;
    const std::size_t H = 8 + 2 * rng.below(3), W = 8 + 2 * rng.below(3);
    imaging::Raster sketch(W, H);
    for (auto& v : sketch.pixels()) v = rng.uniform() < 0.3 ? imaging::kInk : 0;
    LabelMap labels(W, H);
    for (auto& v : labels.pixels()) v = static_cast<std::uint8_t>(rng.below(m.branches[branch].classes));
    std::vector<double> alpha;
    for (std::size_t c = 0; c < m.branches[branch].classes; ++c) alpha.push_back(rng.uniform(0.5, 2.0));
    const auto pose = dataprep::pose_from_index(static_cast<int>(rng.below(8)));
    auto params = m.shared_parameters();
    for (auto* p : m.branch_parameters(branch)) params.push_back(p);
    // Zero biases on blank patches would sit exactly on relu kinks.
    for (auto* p : params)
      for (auto& v : p->value.storage()) v += rng.uniform(-0.2, 0.2);
    const auto rep = numcore::gradient_check(
        std::span<numcore::Parameter<double>* const>(params),
        [&](Tape<double>& tape) {
          const auto in = tape.constant(parsenet::raster_tensor<double>(sketch));
          const auto out = parsenet::forward_batch(tape, m, {in}, {branch}, H, W);
          return total_loss(out[0].scores, labels, alpha, out[0].pose, pose, 0.7).total;
        },
        1e-6);
    EXPECT_LT(rep.max_error, 1e-3) << "seed " << seed << " worst " << params[rep.worst_input]->name << "[" << rep.worst_index << "]";
  }
}

std::vector<dataprep::DatasetItem> toy_items(std::size_t n, std::uint64_t seed) {
  numcore::Rng rng(seed);
  std::vector<dataprep::DatasetItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    dataprep::DatasetItem it;
    it.branch = i % 2;
    it.category = it.branch == 0 ? "a" : "b";
    it.id = it.category + "/" + std::to_string(i);
    it.sample.sketch = imaging::Raster(16, 16);
    it.sample.labels = LabelMap(16, 16);
    const std::size_t parts = it.branch == 0 ? 2 : 3;
    for (std::size_t k = 0; k < it.sample.labels.size(); ++k) {
      it.sample.labels[k] = static_cast<std::uint8_t>(rng.below(parts + 1));
      if (it.sample.labels[k] % 2) it.sample.sketch[k] = imaging::kInk;
    }
    it.sample.pose = dataprep::pose_from_index(static_cast<int>(rng.below(8)));
    it.sample.category = it.category;
    items.push_back(it);
  }
  return items;
}

TrainPlan quick_plan() {
  TrainPlan p;
  p.max_iterations = 12;
  p.lr_body = p.lr_seg_final = p.lr_pose = 0.01;
  p.seed = 3;
  return p;
}

TEST(TrainParser, FrozenSharedLayersStayBitIdentical) {
  const auto tax = toy_taxonomy();
  auto m = parsenet::build_model(tiny_config(), tax, 1);
  std::vector<numcore::TensorF> before, branch_before;
  for (auto* p : m.shared_parameters()) before.push_back(p->value);
  for (auto* p : m.branch_parameters(0)) branch_before.push_back(p->value);
  auto plan = quick_plan();
  plan.freeze = {"shared"};
  const auto log = train_parser(m, tax, toy_items(6, 2), plan);
  EXPECT_EQ(log.size(), plan.max_iterations);
  const auto shared = m.shared_parameters();
  for (std::size_t i = 0; i < shared.size(); ++i) EXPECT_EQ(shared[i]->value, before[i]) << shared[i]->name;
  bool moved = false;
  const auto branch = m.branch_parameters(0);
  for (std::size_t i = 0; i < branch.size(); ++i) moved |= !(branch[i]->value == branch_before[i]);
  EXPECT_TRUE(moved);
}

TEST(TrainParser, DeterministicLogAndCsv) {
  const auto tax = toy_taxonomy();
  auto a = parsenet::build_model(tiny_config(), tax, 1);
  auto b = parsenet::build_model(tiny_config(), tax, 1);
  const auto items = toy_items(6, 2);
  const auto la = train_parser(a, tax, items, quick_plan());
  const auto lb = train_parser(b, tax, items, quick_plan());
  EXPECT_EQ(loss_csv(la), loss_csv(lb));
  EXPECT_EQ(loss_csv(la).rfind("iter,seg_loss,pose_loss,total,lr\n0,", 0), 0u);
  for (const auto& r : la) EXPECT_NEAR(r.total, r.seg + r.pose, 1e-5 * (1 + r.total));
}

TEST(TrainParser, NonFiniteLossNamesTheIteration) {
  const auto tax = toy_taxonomy();
  auto m = parsenet::build_model(tiny_config(), tax, 1);
  // relu swallows a NaN weight upstream, so poison the final classifier.
  for (std::size_t b = 0; b < 2; ++b) m.branches[b].seg.b.value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train_parser(m, tax, toy_items(4, 2), quick_plan());
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(TrainParser, PlanValidation) {
  auto p = quick_plan();
  p.lambda = -1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = quick_plan();
  p.lr_pose = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  const auto tax = toy_taxonomy();
  auto m = parsenet::build_model(tiny_config(), tax, 1);
  EXPECT_THROW(train_parser(m, tax, {}, quick_plan()), ConfigError);
}

TEST(TrainRouter, OverfitsTwentySketchesDeterministically) {
  numcore::Rng rng(30);
  std::vector<RouterSample> samples;
  for (std::size_t i = 0; i < 20; ++i) {
    imaging::Raster r(48, 48);
    const std::size_t label = i % 2;
    // Class 0 draws horizontal strokes, class 1 vertical ones.
    for (int k = 0; k < 4; ++k) {
      const std::size_t a = 4 + rng.below(40), b = 4 + rng.below(28);
      for (std::size_t t = 0; t < 16; ++t) {
        if (label == 0) r.at(b + t, a) = imaging::kInk;
        else r.at(a, b + t) = imaging::kInk;
      }
    }
    samples.push_back({imaging::dilate_square(r, 3), label});
  }
  RouterPlan plan;
  plan.batch_size = 8;
  plan.max_iterations = 60;
  plan.lr = 0.01;
  plan.augment = false;
  plan.seed = 4;
  routercls::RouterConfig cfg;
  cfg.width_divisor = 8;
  cfg.dropout = 0.0;
  auto net = routercls::build_router(2, 2, cfg);
  auto twin = routercls::build_router(2, 2, cfg);
  const auto log = train_router(net, samples, plan);
  EXPECT_EQ(loss_csv(log), loss_csv(train_router(twin, samples, plan)));
  std::size_t correct = 0;
  for (const auto& s : samples) {
    routercls::PoolingConfig single;
    single.multi_view = false;
    correct += routercls::classify_pooled(net, s.sketch, single).branch == s.label;
  }
  EXPECT_EQ(correct, samples.size());
  plan.batch_size = 0;
  EXPECT_THROW(train_router(net, samples, plan), ConfigError);
}

}  // namespace
}  // namespace sketchparse::learn
