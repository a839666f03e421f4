#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchparse/dataprep/pose.hpp"
#include "sketchparse/imaging/raster.hpp"
#include "sketchparse/numcore/ops.hpp"
#include "sketchparse/taxonomy/taxonomy.hpp"

namespace sketchparse::parsenet {

using numcore::ConvSpec;
using numcore::Parameter;
using numcore::Tape;
using numcore::Tensor;
using numcore::TensorF;
using numcore::Var;

/// One entry of the trunk stack: a conv (followed by relu) or a max pool.
struct TrunkLayer {
  enum class Kind { kConv, kPool };
  Kind kind = Kind::kConv;
  ConvSpec conv;
  std::size_t window = 0;
  std::size_t stride = 0;

  static TrunkLayer make_conv(std::size_t k, std::size_t s, std::size_t r, std::size_t out) {
    return {Kind::kConv, ConvSpec{k, s, r, out, std::nullopt}, 0, 0};
  }
  static TrunkLayer make_pool(std::size_t window, std::size_t stride) {
    return {Kind::kPool, {}, window, stride};
  }
};

/// Pose auxiliary head: two strided dilated convs, a wide template conv, then
/// global averaging and a fully connected layer to 8 poses.
struct PoseHeadSpec {
  ConvSpec first{3, 2, 2, 32, std::nullopt};
  ConvSpec second{3, 2, 2, 32, std::nullopt};
  ConvSpec templ{11, 1, 1, 32, std::nullopt};
};

struct ModelConfig {
  std::size_t in_channels = 1;
  std::vector<TrunkLayer> trunk;
  /// Layers [0, split_index) are shared; the rest are copied into every branch.
  std::size_t split_index = 0;
  PoseHeadSpec pose;

  /// 16-32-48-64-64-64, two stride-2 reductions then dilations 2/4/8; split
  /// after block 5.
  static ModelConfig desk_default();
  /// Product of trunk strides (conv and pool).
  std::size_t stride_product() const;
  /// Throws ConfigError on an inconsistent stack.
  void validate() const;
};

template <typename T>
struct ConvLayer {
  ConvSpec spec;
  Parameter<T> w;
  Parameter<T> b;
};

template <typename T>
struct BranchNet {
  std::string name;
  std::size_t classes = 0;  // n_i + 1
  std::vector<ConvLayer<T>> body;
  ConvLayer<T> seg;
  ConvLayer<T> pose_first;
  ConvLayer<T> pose_second;
  ConvLayer<T> pose_templ;
  Parameter<T> pose_fc_w;
  Parameter<T> pose_fc_b;
};

/// Shared level plus K expert branches. Learning-rate groups: "body" for
/// trunk convs, "seg_final" for the per-branch classifier, "pose" for the
/// pose head.
template <typename T>
struct Model {
  ModelConfig cfg;
  taxonomy::Digest digest{};
  std::vector<ConvLayer<T>> shared;
  std::vector<BranchNet<T>> branches;

  std::size_t branch_count() const { return branches.size(); }
  std::vector<Parameter<T>*> parameters();
  std::vector<Parameter<T>*> shared_parameters();
  std::vector<Parameter<T>*> branch_parameters(std::size_t branch);

  template <typename U>
  Model<U> cast() const;
};

/// He-initialized model with one branch per super-category of `tax`.
Model<float> build_model(const ModelConfig& cfg, const taxonomy::Taxonomy& tax, std::uint64_t seed);

/// Raster to [1,H,W] with ink mapped to 1.
template <typename T>
Tensor<T> raster_tensor(const imaging::Raster& r);

template <typename T>
Var<T> forward_shared(Tape<T>& tape, Model<T>& m, Var<T> input);

template <typename T>
struct BranchOutput {
  Var<T> coarse;  // pre-upsample scores [n_i+1, h, w]
  Var<T> scores;  // scores at input resolution [n_i+1, H, W]
  Var<T> pose;    // logits [8]
};

/// `height`/`width` give the output resolution (the padded input size).
template <typename T>
BranchOutput<T> forward_branch(Tape<T>& tape, Model<T>& m, std::size_t branch, Var<T> features,
                               std::size_t height, std::size_t width);

/// Per-sample branch ids of a mini-batch.
using BranchIndexArray = std::vector<std::size_t>;

/// Scatters `items` by branch id, keeping relative order within a branch.
template <typename Item>
std::vector<std::vector<Item>> route(const std::vector<Item>& items, const BranchIndexArray& bia,
                                     std::size_t branch_count) {
  if (items.size() != bia.size()) {
    throw ContractViolation("route: " + std::to_string(items.size()) + " items but " +
                            std::to_string(bia.size()) + " branch ids");
  }
  std::vector<std::vector<Item>> out(branch_count);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (bia[i] >= branch_count) {
      throw ContractViolation("route: branch id " + std::to_string(bia[i]) + " >= K=" +
                              std::to_string(branch_count));
    }
    out[bia[i]].push_back(items[i]);
  }
  return out;
}

/// Inverse of route: gathers per-branch items back into mini-batch order.
template <typename Item>
std::vector<Item> recombine(const std::vector<std::vector<Item>>& routed, const BranchIndexArray& bia) {
  std::vector<std::size_t> cursor(routed.size(), 0);
  std::vector<Item> out;
  out.reserve(bia.size());
  for (std::size_t b : bia) {
    if (b >= routed.size() || cursor[b] >= routed[b].size()) {
      throw ContractViolation("recombine: branch index array does not match routed batches");
    }
    out.push_back(routed[b][cursor[b]++]);
  }
  for (std::size_t b = 0; b < routed.size(); ++b)
    if (cursor[b] != routed[b].size()) throw ContractViolation("recombine: unused routed items");
  return out;
}

/// Shared level per sample, route by `bia`, branch level, recombine. Outputs
/// are in mini-batch order.
template <typename T>
std::vector<BranchOutput<T>> forward_batch(Tape<T>& tape, Model<T>& m, const std::vector<Var<T>>& inputs,
                                           const BranchIndexArray& bia, std::size_t height, std::size_t width) {
  std::vector<Var<T>> features;
  features.reserve(inputs.size());
  for (const auto& in : inputs) features.push_back(forward_shared(tape, m, in));
  const auto routed = route(features, bia, m.branch_count());
  std::vector<std::vector<BranchOutput<T>>> outs(routed.size());
  for (std::size_t b = 0; b < routed.size(); ++b)
    for (const auto& f : routed[b]) outs[b].push_back(forward_branch(tape, m, b, f, height, width));
  return recombine(outs, bia);
}

struct InferResult {
  imaging::LabelMap labels;
  dataprep::Pose pose = dataprep::Pose::kN;
  std::vector<double> pose_probs;
};

/// Pads to the stride multiple, runs shared and branch levels without
/// gradients, and takes per-pixel and pose argmaxes.
InferResult infer(const Model<float>& m, std::size_t branch, const imaging::Raster& sketch);

}  // namespace sketchparse::parsenet
