#include "sketchparse/routercls/router.hpp"

#include <algorithm>
#include <cmath>

#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/numcore/rng.hpp"
#include "sketchparse/parsenet/checkpoint.hpp"
#include "sketchparse/parsenet/model.hpp"

namespace sketchparse::routercls {

using numcore::ConvSpec;
using numcore::Tape;
using numcore::Var;

namespace {

// Positions after which a 3x3/2 max pool follows.
constexpr std::size_t kPoolAfter[] = {0, 1, 4};

}  // namespace

std::vector<Parameter<float>*> RouterNet::parameters() {
  std::vector<Parameter<float>*> out;
  for (auto& c : convs) {
    out.push_back(&c.w);
    out.push_back(&c.b);
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

RouterNet build_router(std::size_t K, std::uint64_t seed, const RouterConfig& cfg) {
  if (K < 2) throw ConfigError("router needs at least 2 classes, got " + std::to_string(K));
  if (cfg.width_divisor == 0) throw ConfigError("router width divisor must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("router dropout must lie in [0,1)");
  RouterNet net;
  net.cfg = cfg;
  net.classes = K;
  const std::size_t d = cfg.width_divisor;
  auto width = [d](std::size_t w) { return std::max<std::size_t>(1, w / d); };
  const std::vector<ConvSpec> specs{
      {15, 3, 1, width(64), std::nullopt}, {5, 1, 1, width(128), std::nullopt},
      {3, 1, 1, width(256), std::nullopt}, {3, 1, 1, width(256), std::nullopt},
      {3, 1, 1, width(256), std::nullopt}, {1, 1, 1, width(512), std::nullopt}};
  numcore::Rng rng(seed);
  std::size_t in = 1;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    RouterNet::Conv c;
    c.spec = s;
    const std::string name = "router.conv" + std::to_string(i);
    c.w = {name + ".w", "body", TensorF({s.out_channels, in, s.kernel, s.kernel}), {}};
    const double sd = std::sqrt(2.0 / static_cast<double>(in * s.kernel * s.kernel));
    for (auto& v : c.w.value.storage()) v = static_cast<float>(sd * rng.normal());
    c.b = {name + ".b", "body", TensorF({s.out_channels}), {}};
    net.convs.push_back(std::move(c));
    in = s.out_channels;
  }
  net.out_w = {"router.out.w", "body", TensorF({K, in}), {}};
  const double sd = std::sqrt(1.0 / static_cast<double>(in));
  for (auto& v : net.out_w.value.storage()) v = static_cast<float>(sd * rng.normal());
  net.out_b = {"router.out.b", "body", TensorF({K}), {}};
  return net;
}

Var<float> router_forward(Tape<float>& tape, RouterNet& net, Var<float> x) {
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    auto& c = net.convs[i];
    x = numcore::relu(numcore::conv2d(x, tape.param(c.w), tape.param(c.b), c.spec));
    if (std::find(std::begin(kPoolAfter), std::end(kPoolAfter), i) != std::end(kPoolAfter)) {
      x = numcore::maxpool2d(x, 3, 2);
    }
  }
  x = numcore::dropout(x, net.cfg.dropout);
  x = numcore::global_average_pool(x);
  return numcore::linear(x, tape.param(net.out_w), tape.param(net.out_b));
}

std::vector<double> router_scores(const RouterNet& cnet, const imaging::Raster& view) {
  auto& net = const_cast<RouterNet&>(cnet);  // read-only when gradients are off
  Tape<float> tape(false, 0, false);
  const auto logits = router_forward(tape, net, tape.constant(parsenet::raster_tensor<float>(view)));
  const auto& z = logits.value().storage();
  const numcore::TensorD p = numcore::softmax(numcore::TensorD({z.size()}, std::vector<double>(z.begin(), z.end())));
  return {p.storage().begin(), p.storage().end()};
}

Classification classify_pooled(const RouterNet& net, const imaging::Raster& sketch, const PoolingConfig& pooling) {
  if (sketch.empty()) throw ContractViolation("classify_pooled: empty sketch");
  std::vector<std::vector<double>> per_view;
  if (!pooling.multi_view) {
    per_view.push_back(router_scores(net, sketch));
  } else {
    for (const auto& orientation : {sketch, imaging::mirror_v(sketch)})
      for (const auto& v : imaging::crops_and_pad(orientation, pooling.crop_fraction))
        per_view.push_back(router_scores(net, v));
  }
  std::sort(per_view.begin(), per_view.end());
  Classification c;
  c.scores.assign(net.classes, 0.0);
  for (const auto& s : per_view)
    for (std::size_t k = 0; k < s.size(); ++k) c.scores[k] += s[k];
  for (auto& s : c.scores) s /= static_cast<double>(per_view.size());
  c.branch = static_cast<std::size_t>(std::max_element(c.scores.begin(), c.scores.end()) - c.scores.begin());
  return c;
}

void save_router(const RouterNet& cnet, const std::filesystem::path& path) {
  auto& net = const_cast<RouterNet&>(cnet);
  parsenet::CheckpointData d;
  d.digest = net.digest;
  d.tensors.push_back({"meta.router", TensorF({3}, {static_cast<float>(net.classes),
                                                    static_cast<float>(net.cfg.width_divisor),
                                                    static_cast<float>(net.cfg.dropout)})});
  for (auto* p : net.parameters()) d.tensors.push_back({p->name, p->value});
  parsenet::write_checkpoint(path, parsenet::kRouterMagic, d);
}

RouterNet load_router(const std::filesystem::path& path, const taxonomy::Taxonomy& expected) {
  using parsenet::CheckpointError;
  const auto d = parsenet::read_checkpoint(path, parsenet::kRouterMagic);
  parsenet::check_digest(d.digest, expected.digest(), "router checkpoint " + path.string());
  if (d.tensors.empty() || d.tensors[0].name != "meta.router" || d.tensors[0].value.size() != 3) {
    throw CheckpointError(path.string() + ": first tensor must be meta.router with 3 values");
  }
  const auto& meta = d.tensors[0].value;
  const auto K = static_cast<std::size_t>(meta[0]);
  if (K != expected.branch_count()) {
    throw CheckpointError(path.string() + ": router has " + std::to_string(K) + " classes, taxonomy has " +
                          std::to_string(expected.branch_count()) + " super-categories");
  }
  RouterConfig cfg;
  cfg.width_divisor = static_cast<std::size_t>(meta[1]);
  cfg.dropout = static_cast<double>(meta[2]);
  RouterNet net;
  try {
    net = build_router(K, 0, cfg);
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  net.digest = d.digest;
  const auto params = net.parameters();
  if (params.size() + 1 != d.tensors.size()) {
    throw CheckpointError(path.string() + ": expected " + std::to_string(params.size()) + " parameter tensors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = d.tensors[i + 1];
    if (t.name != params[i]->name || t.value.shape() != params[i]->value.shape()) {
      throw CheckpointError(path.string() + ": tensor '" + t.name + "' does not fit '" + params[i]->name + "'");
    }
    params[i]->value = t.value;
  }
  return net;
}

}  // namespace sketchparse::routercls
