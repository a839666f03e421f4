#include "sketchparse/interface/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "sketchparse/eval/eval.hpp"
#include "sketchparse/graphrank/graphrank.hpp"
#include "sketchparse/learn/learn.hpp"
#include "sketchparse/numcore/gradcheck.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::interface {

namespace {

using numcore::Rng;
using numcore::Tape;
using numcore::TensorD;
using numcore::Var;

constexpr double kGradTolerance = 1e-3;

TensorD random_tensor(numcore::Shape shape, Rng& rng) {
  TensorD t(std::move(shape));
  for (auto& v : t.storage()) v = rng.uniform(-1.0, 1.0);
  return t;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CheckResult grad_result(const std::string& name, double worst) {
  return {name, worst < kGradTolerance, fmt("max rel err %.2e", worst)};
}

CheckResult check_layer_gradients(Rng& rng) {
  const std::vector<int> target{1};
  const std::vector<double> unit{1.0, 1.0, 1.0};
  double worst = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t C = 1 + rng.below(3), H = 5 + rng.below(5), W = 5 + rng.below(5);
    const numcore::ConvSpec spec{1 + 2 * rng.below(2), 1 + rng.below(2), 1 + rng.below(2), 1 + rng.below(3),
                                 std::nullopt};
    const std::size_t O = spec.out_channels;
    const std::vector<TensorD> in{random_tensor({C, H, W}, rng), random_tensor({O, C, spec.kernel, spec.kernel}, rng),
                                  random_tensor({O}, rng), random_tensor({3, O}, rng), random_tensor({3}, rng)};
    const auto rep = numcore::gradient_check(in, [&](Tape<double>&, std::span<const Var<double>> v) {
      auto x = numcore::conv2d(v[0], v[1], v[2], spec);
      x = numcore::maxpool2d(x, 2, 1);
      auto up = numcore::crop(numcore::bilinear_upsample(x, 2), x.shape()[1] * 2 - 1, x.shape()[2] * 2 - 1);
      auto g = numcore::global_average_pool(numcore::add(numcore::scale(up, 0.5), numcore::scale(up, 0.25)));
      const auto logits = numcore::linear(numcore::reshape(g, {O}), v[3], v[4]);
      return numcore::weighted_softmax_ce(numcore::reshape(logits, {3, 1}), std::span<const int>(target),
                                          std::span<const double>(unit));
    }, 1e-6);
    worst = std::max(worst, rep.max_error);
  }
  return grad_result("gradient: conv/pool/upsample/linear stack", worst);
}

CheckResult check_ce_gradients(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t L = 2 + rng.below(4), P = 3 + rng.below(10);
    std::vector<int> targets(P);
    for (auto& t : targets) t = static_cast<int>(rng.below(L));
    std::vector<double> w(L);
    for (auto& x : w) x = rng.uniform(0.2, 3.0);
    const auto rep = numcore::gradient_check({random_tensor({L, P}, rng)},
                                             [&](Tape<double>&, std::span<const Var<double>> v) {
                                               return numcore::weighted_softmax_ce(
                                                   v[0], std::span<const int>(targets), std::span<const double>(w));
                                             },
                                             1e-6);
    worst = std::max(worst, rep.max_error);
  }
  return grad_result("gradient: weighted softmax cross-entropy", worst);
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

CheckResult check_total_loss_gradients(Rng& rng) {
  const auto tax = taxonomy::Taxonomy::parse("super A\ncat a : head, body\nsuper B\ncat b : wheel, window, door\n");
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 2; ++s) {
    auto m = parsenet::build_model(tiny_config(), tax, rng.engine()()).cast<double>();
    const std::size_t branch = s;
    const std::size_t H = 8, W = 10;
    imaging::Raster sketch(W, H);
    for (auto& v : sketch.pixels()) v = rng.uniform() < 0.3 ? imaging::kInk : 0;
    imaging::LabelMap labels(W, H);
    for (auto& v : labels.pixels()) v = static_cast<std::uint8_t>(rng.below(m.branches[branch].classes));
    std::vector<double> alpha;
    for (std::size_t c = 0; c < m.branches[branch].classes; ++c) alpha.push_back(rng.uniform(0.5, 2.0));
    const auto pose = dataprep::pose_from_index(static_cast<int>(rng.below(8)));
    auto params = m.shared_parameters();
    for (auto* p : m.branch_parameters(branch)) params.push_back(p);
    // Move biases off zero so blank patches do not sit on relu kinks.
    for (auto* p : params)
      for (auto& v : p->value.storage()) v += rng.uniform(-0.2, 0.2);
    const auto rep = numcore::gradient_check(
        std::span<numcore::Parameter<double>* const>(params),
        [&](Tape<double>& tape) {
          const auto in = tape.constant(parsenet::raster_tensor<double>(sketch));
          const auto out = parsenet::forward_batch(tape, m, {in}, {branch}, H, W);
          return learn::total_loss(out[0].scores, labels, alpha, out[0].pose, pose, 1.0).total;
        },
        1e-6, 256);
    worst = std::max(worst, rep.max_error);
  }
  return grad_result("gradient: total loss through a two-branch model", worst);
}

CheckResult check_route(Rng& rng) {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + rng.below(5), n = rng.below(20);
    std::vector<int> items(n);
    parsenet::BranchIndexArray bia(n);
    for (std::size_t i = 0; i < n; ++i) {
      items[i] = static_cast<int>(rng.below(1000));
      bia[i] = rng.below(K);
    }
    if (parsenet::recombine(parsenet::route(items, bia, K), bia) != items) {
      return {"route/recombine identity", false, "trial " + std::to_string(trial)};
    }
  }
  return {"route/recombine identity", true, "100 random batches"};
}

CheckResult check_balance(Rng& rng) {
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 2 + rng.below(5), n = 1 + rng.below(5);
    std::vector<imaging::LabelMap> maps;
    for (std::size_t i = 0; i < n; ++i) {
      imaging::LabelMap m(3 + rng.below(5), 3 + rng.below(5));
      for (auto& v : m.pixels()) v = static_cast<std::uint8_t>(rng.below(L));
      maps.push_back(m);
    }
    for (std::size_t c = 0; c < L; ++c) maps[rng.below(n)][c] = static_cast<std::uint8_t>(c);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < L; ++c) names.push_back("l" + std::to_string(c));
    std::vector<double> f(L);
    for (std::size_t c = 0; c < L; ++c) {
      double px = 0, imgs = 0;
      for (const auto& m : maps) {
        const auto k = std::count(m.pixels().begin(), m.pixels().end(), c);
        px += static_cast<double>(k);
        imgs += k > 0 ? 1 : 0;
      }
      f[c] = px / imgs;
    }
    auto s = f;
    std::sort(s.begin(), s.end());
    const double M = L % 2 ? s[L / 2] : (s[L / 2 - 1] + s[L / 2]) / 2;
    const auto b = learn::compute_class_balance(maps, names);
    for (std::size_t c = 0; c < L; ++c) {
      if (std::abs(b.alpha[c] - M / f[c]) > 1e-12 * (M / f[c])) {
        return {"class-balance oracle", false, "trial " + std::to_string(trial)};
      }
    }
  }
  return {"class-balance oracle", true, "50 random toy sets"};
}

CheckResult check_iou(Rng& rng) {
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 2 + rng.below(4);
    imaging::LabelMap gt(6 + rng.below(6), 6 + rng.below(6)), pred(gt.width(), gt.height());
    for (auto& v : gt.pixels()) v = static_cast<std::uint8_t>(rng.below(L));
    for (auto& v : pred.pixels()) v = static_cast<std::uint8_t>(rng.below(L));
    gt[0] = 1;
    std::map<std::pair<int, int>, double> n;
    for (std::size_t i = 0; i < gt.size(); ++i) n[{gt[i], pred[i]}] += 1;
    double sum = 0;
    std::size_t parts = 0;
    for (int i = 1; i < static_cast<int>(L); ++i) {
      double t = 0, col = 0;
      for (int j = 0; j < static_cast<int>(L); ++j) {
        t += n[{i, j}];
        col += n[{j, i}];
      }
      if (t == 0) continue;
      sum += n[{i, i}] / (t + col - n[{i, i}]);
      ++parts;
    }
    const double expect = sum / static_cast<double>(parts);
    if (std::abs(eval::sketch_iou(pred, gt).siou - expect) > 1e-12) {
      return {"IOU oracle", false, "trial " + std::to_string(trial)};
    }
  }
  return {"IOU oracle", true, "50 random label pairs"};
}

imaging::LabelMap blob_map(Rng& rng) {
  imaging::LabelMap m(48, 48);
  const std::size_t blobs = 3 + rng.below(4);
  for (std::size_t b = 0; b < blobs; ++b) {
    const std::size_t w = 5 + rng.below(10), h = 5 + rng.below(10);
    const std::size_t x0 = rng.below(48 - w), y0 = rng.below(48 - h);
    const auto id = static_cast<std::uint8_t>(1 + rng.below(3));
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x) m.at(x, y) = id;
  }
  return m;
}

CheckResult check_rrwm_permutation(Rng& rng) {
  std::size_t agree = 0;
  const std::size_t trials = 20;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto g = graphrank::build_graph(blob_map(rng));
    const auto h = graphrank::build_graph(blob_map(rng));
    const auto a = graphrank::build_affinity(g, h);
    // Keep the global pair first, shuffle the rest.
    std::vector<std::size_t> perm(a.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::vector<std::size_t> tail(perm.begin() + 1, perm.end());
    numcore::shuffle(tail, rng);
    std::copy(tail.begin(), tail.end(), perm.begin() + 1);
    graphrank::Affinity b = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      b.candidates[i] = a.candidates[perm[i]];
      for (std::size_t j = 0; j < a.size(); ++j) b.matrix[i * a.size() + j] = a.at(perm[i], perm[j]);
    }
    const auto ra = graphrank::rrwm_match(a);
    const auto rb = graphrank::rrwm_match(b);
    std::set<std::size_t> mapped;
    for (auto s : rb.selected) mapped.insert(perm[s]);
    if (mapped == std::set<std::size_t>(ra.selected.begin(), ra.selected.end())) ++agree;
  }
  return {"RRWM permutation equivariance", agree * 20 >= trials * 19,
          std::to_string(agree) + "/" + std::to_string(trials) + " identical assignments"};
}

CheckResult check_augment(Rng& rng) {
  dataprep::PairedSample p;
  p.sketch = imaging::Raster(32, 32);
  p.labels = imaging::LabelMap(32, 32);
  for (std::size_t i = 0; i < p.sketch.size(); ++i) {
    p.sketch[i] = rng.uniform() < 0.2 ? imaging::kInk : 0;
    p.labels[i] = static_cast<std::uint8_t>(rng.below(3));
  }
  const auto seg = dataprep::augment_seg(p).size();
  const auto cls = dataprep::augment_cls(p.sketch).size();
  return {"augmentation cardinalities", seg == 14 && cls == 70,
          std::to_string(seg) + " segmentation, " + std::to_string(cls) + " classification variants"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_layer_gradients(rng));
  out.push_back(check_ce_gradients(rng));
  out.push_back(check_total_loss_gradients(rng));
  out.push_back(check_route(rng));
  out.push_back(check_balance(rng));
  out.push_back(check_iou(rng));
  out.push_back(check_rrwm_permutation(rng));
  out.push_back(check_augment(rng));
  return out;
}

}  // namespace sketchparse::interface
