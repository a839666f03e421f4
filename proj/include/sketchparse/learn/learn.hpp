#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchparse/dataprep/dataprep.hpp"
#include "sketchparse/parsenet/model.hpp"
#include "sketchparse/routercls/router.hpp"

namespace sketchparse::learn {

using numcore::Var;

/// Per-label loss weights of one branch. Index 0 is the background.
struct ClassBalance {
  std::vector<double> frequency;  // f_c = pixels of c / images containing c
  double median = 0.0;
  std::vector<double> alpha;      // median / f_c
};

/// Background counts as a label. Even counts take the mean of the two middle
/// frequencies. Throws ConfigError naming the first label that never occurs.
ClassBalance compute_class_balance(const std::vector<imaging::LabelMap>& maps,
                                   const std::vector<std::string>& label_names);

/// Balance over the items of `branch`, labels named from the taxonomy. Parts
/// that never occur get weight 1 and stay out of the median. With
/// `include_background` false the median runs over parts only and the
/// background keeps weight 1.
ClassBalance compute_class_balance(const std::vector<dataprep::DatasetItem>& items,
                                   const taxonomy::Taxonomy& tax, std::size_t branch,
                                   bool include_background = true);

/// All-ones weights for `classes` labels.
ClassBalance uniform_balance(std::size_t classes);

template <typename T>
struct LossTerms {
  Var<T> seg;
  Var<T> pose;
  Var<T> total;  // seg + lambda * pose
};

/// `scores` is [n+1, H, W] for a labelmap of size WxH.
template <typename T>
LossTerms<T> total_loss(Var<T> scores, const imaging::LabelMap& labels, const std::vector<double>& alpha,
                        Var<T> pose_logits, dataprep::Pose pose, double lambda);

struct TrainPlan {
  double lambda = 1.0;
  double lr_body = 5e-4;
  double lr_seg_final = 5e-3;
  double lr_pose = 2.5e-2;
  double momentum = 0.9;
  std::size_t max_iterations = 1000;
  std::uint64_t seed = 0;
  /// Entries match a parameter group or a parameter name prefix.
  std::vector<std::string> freeze;
  bool class_balance = true;
  /// Whether the background gets a balanced weight or stays at 1.
  bool balance_background = true;
  /// Expand every item into its 14 augment_seg variants.
  bool augment = true;

  /// Settings that fit the synthetic 128x128 corpus from scratch in under 15
  /// minutes on one core: higher rates, a lighter pose term, no augmentation,
  /// and part-only balancing.
  static TrainPlan desk_default();
  void validate() const;
};

struct LossRecord {
  std::size_t iteration = 0;
  double seg = 0.0;
  double pose = 0.0;
  double total = 0.0;
  double lr = 0.0;  // body group
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Progress = std::function<void(const LossRecord&)>;

bool is_frozen(const numcore::Parameter<float>& p, const std::vector<std::string>& freeze);

/// Batch size 1, ground-truth routing. Throws TrainingError on a non-finite
/// loss, naming the iteration.
std::vector<LossRecord> train_parser(parsenet::Model<float>& model, const taxonomy::Taxonomy& tax,
                                     const std::vector<dataprep::DatasetItem>& items, const TrainPlan& plan,
                                     const Progress& progress = {});

/// iter,seg_loss,pose_loss,total,lr
void write_loss_csv(const std::vector<LossRecord>& log, const std::filesystem::path& path);
std::string loss_csv(const std::vector<LossRecord>& log);

struct RouterPlan {
  double lr = 7e-4;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t max_iterations = 300;
  std::uint64_t seed = 0;
  /// Expand every sketch into its 70 augment_cls variants.
  bool augment = true;

  void validate() const;
};

struct RouterSample {
  imaging::Raster sketch;
  std::size_t label = 0;
};

/// Mean cross-entropy over mini-batches drawn from a seeded shuffle. The log
/// carries the batch loss in `total` and `seg`; `pose` stays 0.
std::vector<LossRecord> train_router(routercls::RouterNet& net, const std::vector<RouterSample>& samples,
                                     const RouterPlan& plan, const Progress& progress = {});

}  // namespace sketchparse::learn
