#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sketchparse/imaging/raster.hpp"
#include "sketchparse/numcore/ops.hpp"
#include "sketchparse/taxonomy/taxonomy.hpp"

namespace sketchparse::routercls {

using numcore::Parameter;
using numcore::TensorF;

struct RouterConfig {
  /// Every hidden layer width is divided by this (1 = tabled widths).
  std::size_t width_divisor = 1;
  double dropout = 0.7;
};

/// conv15/3 x64, pool3/2, conv5 x128, pool3/2, 3 x conv3 x256, pool3/2,
/// conv1 x512, dropout, global average, then the K-way 1x1 stage (a linear
/// layer on the pooled vector).
struct RouterNet {
  RouterConfig cfg;
  std::size_t classes = 0;
  taxonomy::Digest digest{};
  struct Conv {
    numcore::ConvSpec spec;
    Parameter<float> w;
    Parameter<float> b;
  };
  std::vector<Conv> convs;
  Parameter<float> out_w;
  Parameter<float> out_b;

  std::vector<Parameter<float>*> parameters();
};

RouterNet build_router(std::size_t K, std::uint64_t seed, const RouterConfig& cfg = {});

/// Logits [K]. Dropout is active only on a training tape.
numcore::Var<float> router_forward(numcore::Tape<float>& tape, RouterNet& net, numcore::Var<float> image);

/// Softmax scores of one view, no gradients.
std::vector<double> router_scores(const RouterNet& net, const imaging::Raster& view);

struct PoolingConfig {
  double crop_fraction = 0.9;
  /// false reduces pooling to a single plain forward pass.
  bool multi_view = true;
};

struct Classification {
  std::size_t branch = 0;
  std::vector<double> scores;
};

/// Averages softmax scores over the 6 crop/pad views of the sketch and of its
/// mirror. View scores are summed in sorted order so the result is bit-exact
/// under mirroring. Ties go to the lowest index.
Classification classify_pooled(const RouterNet& net, const imaging::Raster& sketch,
                               const PoolingConfig& pooling = {});

void save_router(const RouterNet& net, const std::filesystem::path& path);
RouterNet load_router(const std::filesystem::path& path, const taxonomy::Taxonomy& expected);

}  // namespace sketchparse::routercls
