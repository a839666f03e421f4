#include "sketchparse/parsenet/model.hpp"

#include <cmath>

#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::parsenet {

using numcore::Rng;

ModelConfig ModelConfig::desk_default() {
  ModelConfig c;
  c.in_channels = 1;
  c.trunk = {TrunkLayer::make_conv(3, 1, 1, 16), TrunkLayer::make_conv(3, 2, 1, 32),
             TrunkLayer::make_conv(3, 2, 1, 48), TrunkLayer::make_conv(3, 1, 2, 64),
             TrunkLayer::make_conv(3, 1, 4, 64), TrunkLayer::make_conv(3, 1, 8, 64)};
  c.split_index = 5;
  return c;
}

std::size_t ModelConfig::stride_product() const {
  std::size_t s = 1;
  for (const auto& l : trunk) s *= l.kind == TrunkLayer::Kind::kConv ? l.conv.stride : l.stride;
  return s;
}

void ModelConfig::validate() const {
  if (in_channels == 0) throw ConfigError("model: in_channels must be positive");
  if (trunk.empty()) throw ConfigError("model: empty trunk");
  if (split_index > trunk.size()) {
    throw ConfigError("model: split index " + std::to_string(split_index) + " beyond trunk of " +
                      std::to_string(trunk.size()) + " layers");
  }
  bool any_conv = false;
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    const auto& l = trunk[i];
    if (l.kind == TrunkLayer::Kind::kConv) {
      any_conv = true;
      if (l.conv.out_channels == 0 || l.conv.kernel == 0 || l.conv.stride == 0 || l.conv.dilation == 0) {
        throw ConfigError("model: trunk layer " + std::to_string(i) + " has a zero-sized conv");
      }
    } else if (l.window == 0 || l.stride == 0) {
      throw ConfigError("model: trunk layer " + std::to_string(i) + " has a zero-sized pool");
    }
  }
  if (!any_conv) throw ConfigError("model: trunk has no conv layer");
  for (const ConvSpec* s : {&pose.first, &pose.second, &pose.templ}) {
    if (s->out_channels == 0 || s->kernel == 0 || s->stride == 0 || s->dilation == 0) {
      throw ConfigError("model: pose head conv has a zero dimension");
    }
  }
}

namespace {

ConvLayer<float> make_conv(const std::string& name, const std::string& group, const ConvSpec& spec,
                           std::size_t in_ch, Rng& rng) {
  const std::size_t k = spec.kernel;
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * k * k));
  ConvLayer<float> c;
  c.spec = spec;
  c.w = {name + ".w", group, TensorF({spec.out_channels, in_ch, k, k}), {}};
  for (auto& v : c.w.value.storage()) v = static_cast<float>(stddev * rng.normal());
  c.b = {name + ".b", group, TensorF({spec.out_channels}), {}};
  return c;
}

template <typename T, typename U>
ConvLayer<U> cast_conv(const ConvLayer<T>& c) {
  return {c.spec, {c.w.name, c.w.group, c.w.value.template cast<U>(), {}},
          {c.b.name, c.b.group, c.b.value.template cast<U>(), {}}};
}

template <typename T, typename U>
Parameter<U> cast_param(const Parameter<T>& p) {
  return {p.name, p.group, p.value.template cast<U>(), {}};
}

template <typename T>
Var<T> apply_conv(Tape<T>& tape, ConvLayer<T>& c, Var<T> x) {
  return numcore::conv2d(x, tape.param(c.w), tape.param(c.b), c.spec);
}

}  // namespace

Model<float> build_model(const ModelConfig& cfg, const taxonomy::Taxonomy& tax, std::uint64_t seed) {
  cfg.validate();
  Model<float> m;
  m.cfg = cfg;
  m.digest = tax.digest();
  Rng rng(seed);
  std::size_t ch = cfg.in_channels;
  for (std::size_t i = 0; i < cfg.split_index; ++i) {
    const auto& l = cfg.trunk[i];
    if (l.kind != TrunkLayer::Kind::kConv) continue;
    m.shared.push_back(make_conv("shared." + std::to_string(i), "body", l.conv, ch, rng));
    ch = l.conv.out_channels;
  }
  const std::size_t split_channels = ch;
  for (std::size_t b = 0; b < tax.branch_count(); ++b) {
    BranchNet<float> br;
    br.name = tax.branch(b).name;
    br.classes = tax.part_count(b) + 1;
    const std::string prefix = "branch." + std::to_string(b) + ".";
    ch = split_channels;
    for (std::size_t i = cfg.split_index; i < cfg.trunk.size(); ++i) {
      const auto& l = cfg.trunk[i];
      if (l.kind != TrunkLayer::Kind::kConv) continue;
      br.body.push_back(make_conv(prefix + "body." + std::to_string(i), "body", l.conv, ch, rng));
      ch = l.conv.out_channels;
    }
    br.seg = make_conv(prefix + "seg", "seg_final", ConvSpec{1, 1, 1, br.classes, std::nullopt}, ch, rng);
    br.pose_first = make_conv(prefix + "pose.first", "pose", cfg.pose.first, br.classes, rng);
    br.pose_second = make_conv(prefix + "pose.second", "pose", cfg.pose.second, cfg.pose.first.out_channels, rng);
    br.pose_templ = make_conv(prefix + "pose.templ", "pose", cfg.pose.templ, cfg.pose.second.out_channels, rng);
    const std::size_t d = cfg.pose.templ.out_channels;
    br.pose_fc_w = {prefix + "pose.fc.w", "pose", TensorF({dataprep::kPoseCount, d}), {}};
    const double sd = std::sqrt(1.0 / static_cast<double>(d));
    for (auto& v : br.pose_fc_w.value.storage()) v = static_cast<float>(sd * rng.normal());
    br.pose_fc_b = {prefix + "pose.fc.b", "pose", TensorF({dataprep::kPoseCount}), {}};
    m.branches.push_back(std::move(br));
  }
  return m;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::shared_parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& c : shared) {
    out.push_back(&c.w);
    out.push_back(&c.b);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::branch_parameters(std::size_t branch) {
  auto& br = branches.at(branch);
  std::vector<Parameter<T>*> out;
  for (auto& c : br.body) {
    out.push_back(&c.w);
    out.push_back(&c.b);
  }
  for (ConvLayer<T>* c : {&br.seg, &br.pose_first, &br.pose_second, &br.pose_templ}) {
    out.push_back(&c->w);
    out.push_back(&c->b);
  }
  out.push_back(&br.pose_fc_w);
  out.push_back(&br.pose_fc_b);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  auto out = shared_parameters();
  for (std::size_t b = 0; b < branches.size(); ++b) {
    auto more = branch_parameters(b);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> m;
  m.cfg = cfg;
  m.digest = digest;
  for (const auto& c : shared) m.shared.push_back(cast_conv<T, U>(c));
  for (const auto& br : branches) {
    BranchNet<U> o;
    o.name = br.name;
    o.classes = br.classes;
    for (const auto& c : br.body) o.body.push_back(cast_conv<T, U>(c));
    o.seg = cast_conv<T, U>(br.seg);
    o.pose_first = cast_conv<T, U>(br.pose_first);
    o.pose_second = cast_conv<T, U>(br.pose_second);
    o.pose_templ = cast_conv<T, U>(br.pose_templ);
    o.pose_fc_w = cast_param<T, U>(br.pose_fc_w);
    o.pose_fc_b = cast_param<T, U>(br.pose_fc_b);
    m.branches.push_back(std::move(o));
  }
  return m;
}

template <typename T>
Tensor<T> raster_tensor(const imaging::Raster& r) {
  Tensor<T> t({1, r.height(), r.width()});
  for (std::size_t i = 0; i < r.size(); ++i) t[i] = static_cast<T>(r[i]) / T{255};
  return t;
}

namespace {

// Runs trunk layers [begin, end) using `convs` in order.
template <typename T>
Var<T> run_trunk(Tape<T>& tape, const ModelConfig& cfg, std::vector<ConvLayer<T>>& convs, std::size_t begin,
                 std::size_t end, Var<T> x) {
  std::size_t next = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& l = cfg.trunk[i];
    if (l.kind == TrunkLayer::Kind::kConv) {
      x = numcore::relu(apply_conv(tape, convs.at(next++), x));
    } else {
      x = numcore::maxpool2d(x, l.window, l.stride);
    }
  }
  return x;
}

}  // namespace

template <typename T>
Var<T> forward_shared(Tape<T>& tape, Model<T>& m, Var<T> input) {
  const auto& s = input.shape();
  if (s.size() != 3 || s[0] != m.cfg.in_channels) {
    throw ContractViolation("forward_shared: input shape " + numcore::shape_string(s) + " needs " +
                            std::to_string(m.cfg.in_channels) + " channels");
  }
  const std::size_t stride = m.cfg.stride_product();
  if (s[1] % stride != 0 || s[2] % stride != 0) {
    throw ContractViolation("forward_shared: input " + std::to_string(s[1]) + "x" + std::to_string(s[2]) +
                            " not divisible by trunk stride " + std::to_string(stride));
  }
  return run_trunk(tape, m.cfg, m.shared, 0, m.cfg.split_index, input);
}

template <typename T>
BranchOutput<T> forward_branch(Tape<T>& tape, Model<T>& m, std::size_t branch, Var<T> features,
                               std::size_t height, std::size_t width) {
  if (branch >= m.branches.size()) {
    throw ContractViolation("forward_branch: branch " + std::to_string(branch) + " >= K=" +
                            std::to_string(m.branches.size()));
  }
  auto& br = m.branches[branch];
  Var<T> x = run_trunk(tape, m.cfg, br.body, m.cfg.split_index, m.cfg.trunk.size(), features);
  BranchOutput<T> out;
  out.coarse = apply_conv(tape, br.seg, x);
  const std::size_t stride = m.cfg.stride_product();
  out.scores = numcore::crop(numcore::bilinear_upsample(out.coarse, stride), height, width);
  Var<T> p = numcore::relu(apply_conv(tape, br.pose_first, out.coarse));
  p = numcore::relu(apply_conv(tape, br.pose_second, p));
  p = numcore::relu(apply_conv(tape, br.pose_templ, p));
  p = numcore::global_average_pool(p);
  out.pose = numcore::linear(p, tape.param(br.pose_fc_w), tape.param(br.pose_fc_b));
  return out;
}

InferResult infer(const Model<float>& cm, std::size_t branch, const imaging::Raster& sketch) {
  if (sketch.empty()) throw ContractViolation("infer: empty sketch");
  // The tape only reads parameters when gradients are disabled.
  auto& m = const_cast<Model<float>&>(cm);
  const std::size_t stride = m.cfg.stride_product();
  const std::size_t H = (sketch.height() + stride - 1) / stride * stride;
  const std::size_t W = (sketch.width() + stride - 1) / stride * stride;
  const imaging::Raster padded = imaging::pad_to(sketch, W, H);
  Tape<float> tape(false, 0, false);
  const Var<float> in = tape.constant(raster_tensor<float>(padded));
  const auto out = forward_branch(tape, m, branch, forward_shared(tape, m, in), H, W);
  const TensorF& s = out.scores.value();
  const std::size_t C = s.dim(0);
  InferResult r;
  r.labels = imaging::LabelMap(sketch.width(), sketch.height());
  for (std::size_t y = 0; y < sketch.height(); ++y)
    for (std::size_t x = 0; x < sketch.width(); ++x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < C; ++c)
        if (s.at(c, y, x) > s.at(best, y, x)) best = c;
      r.labels.at(x, y) = static_cast<std::uint8_t>(best);
    }
  const TensorF probs = numcore::softmax(out.pose.value());
  std::size_t best = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    r.pose_probs.push_back(probs[k]);
    if (probs[k] > probs[best]) best = k;
  }
  r.pose = dataprep::pose_from_index(static_cast<int>(best));
  return r;
}

template struct Model<float>;
template struct Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template TensorF raster_tensor<float>(const imaging::Raster&);
template numcore::TensorD raster_tensor<double>(const imaging::Raster&);
template Var<float> forward_shared(Tape<float>&, Model<float>&, Var<float>);
template Var<double> forward_shared(Tape<double>&, Model<double>&, Var<double>);
template BranchOutput<float> forward_branch(Tape<float>&, Model<float>&, std::size_t, Var<float>, std::size_t,
                                            std::size_t);
template BranchOutput<double> forward_branch(Tape<double>&, Model<double>&, std::size_t, Var<double>,
                                             std::size_t, std::size_t);

}  // namespace sketchparse::parsenet
