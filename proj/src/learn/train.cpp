#include <cmath>
#include <cstdio>
#include <fstream>

#include "sketchparse/imaging/ops.hpp"
#include "sketchparse/learn/learn.hpp"
#include "sketchparse/numcore/optim.hpp"
#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::learn {

using numcore::Parameter;
using numcore::Tape;

TrainPlan TrainPlan::desk_default() {
  TrainPlan p;
  p.lambda = 0.3;
  p.lr_body = 0.02;
  p.lr_seg_final = 0.02;
  p.lr_pose = 0.005;
  p.max_iterations = 12000;
  p.augment = false;
  p.balance_background = false;
  return p;
}

void TrainPlan::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(lr_body > 0.0 && lr_seg_final > 0.0 && lr_pose > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
}

void RouterPlan::validate() const {
  if (!(lr > 0.0)) throw ConfigError("router learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (batch_size == 0) throw ConfigError("router batch size must be positive");
  if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
}

bool is_frozen(const Parameter<float>& p, const std::vector<std::string>& freeze) {
  for (const auto& f : freeze) {
    if (f.empty()) continue;
    if (p.group == f || p.name.compare(0, f.size(), f) == 0) return true;
  }
  return false;
}

namespace {

// Cycles through a reshuffled index permutation, one epoch at a time.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    cursor_ = n;
  }
  std::size_t next() {
    if (cursor_ == order_.size()) {
      numcore::shuffle(order_, rng_);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  std::vector<std::size_t> order_;
  numcore::Rng rng_;
  std::size_t cursor_ = 0;
};

dataprep::PairedSample pad_for_stride(dataprep::PairedSample s, std::size_t stride) {
  const std::size_t W = (s.sketch.width() + stride - 1) / stride * stride;
  const std::size_t H = (s.sketch.height() + stride - 1) / stride * stride;
  if (W != s.sketch.width() || H != s.sketch.height()) {
    s.sketch = imaging::pad_to(s.sketch, W, H, 0, 0);
    s.labels = imaging::pad_to(s.labels, W, H, 0, 0);
  }
  return s;
}

void check_finite(double v, std::size_t iteration, const char* what) {
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite ") + what + " at iteration " + std::to_string(iteration));
  }
}

}  // namespace

std::vector<LossRecord> train_parser(parsenet::Model<float>& model, const taxonomy::Taxonomy& tax,
                                     const std::vector<dataprep::DatasetItem>& items, const TrainPlan& plan,
                                     const Progress& progress) {
  plan.validate();
  if (items.empty()) throw ConfigError("train_parser: empty dataset");
  if (model.branch_count() != tax.branch_count()) {
    throw ConfigError("model has " + std::to_string(model.branch_count()) + " branches, taxonomy has " +
                      std::to_string(tax.branch_count()));
  }
  std::vector<ClassBalance> balance;
  for (std::size_t b = 0; b < model.branch_count(); ++b) {
    const bool used = std::any_of(items.begin(), items.end(), [b](const auto& it) { return it.branch == b; });
    balance.push_back(plan.class_balance && used ? compute_class_balance(items, tax, b, plan.balance_background)
                                                 : uniform_balance(model.branches[b].classes));
  }

  numcore::OptimState<float> state;
  state.momentum = plan.momentum;
  state.max_iterations = plan.max_iterations;
  state.base_lr = {{"body", plan.lr_body}, {"seg_final", plan.lr_seg_final}, {"pose", plan.lr_pose}};
  std::vector<Parameter<float>*> all = model.parameters();
  std::vector<Parameter<float>*> trainable;
  for (auto* p : all)
    if (!is_frozen(*p, plan.freeze)) trainable.push_back(p);

  const std::size_t variants = plan.augment ? dataprep::kSegVariants : 1;
  const std::size_t stride = model.cfg.stride_product();
  EpochSampler sampler(items.size() * variants, plan.seed);
  std::vector<LossRecord> log;
  log.reserve(plan.max_iterations);
  for (std::size_t it = 0; it < plan.max_iterations; ++it) {
    const std::size_t pick = sampler.next();
    const auto& item = items[pick / variants];
    const auto sample = pad_for_stride(
        plan.augment ? dataprep::augment_seg_variant(item.sample, pick % variants) : item.sample, stride);

    for (auto* p : all) p->zero_grad();
    Tape<float> tape(true, numcore::mix64(plan.seed ^ (it + 1)));
    const auto input = tape.constant(parsenet::raster_tensor<float>(sample.sketch));
    const auto out = parsenet::forward_batch(tape, model, {input}, {item.branch}, sample.sketch.height(),
                                             sample.sketch.width());
    const auto loss = total_loss(out[0].scores, sample.labels, balance[item.branch].alpha, out[0].pose,
                                 sample.pose, plan.lambda);
    LossRecord rec;
    rec.iteration = it;
    rec.seg = loss.seg.value()[0];
    rec.pose = loss.pose.value()[0];
    rec.total = loss.total.value()[0];
    rec.lr = numcore::poly_lr(state, "body");
    check_finite(rec.total, it, "loss");
    tape.backward(loss.total);
    numcore::sgd_momentum_step(std::span<Parameter<float>* const>(trainable), state);
    log.push_back(rec);
    if (progress) progress(rec);
  }
  return log;
}

std::string loss_csv(const std::vector<LossRecord>& log) {
  std::string out = "iter,seg_loss,pose_loss,total,lr\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g\n", r.iteration, r.seg, r.pose, r.total, r.lr);
    out += buf;
  }
  return out;
}

void write_loss_csv(const std::vector<LossRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << loss_csv(log);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<LossRecord> train_router(routercls::RouterNet& net, const std::vector<RouterSample>& samples,
                                     const RouterPlan& plan, const Progress& progress) {
  plan.validate();
  if (net.classes < 2) throw ConfigError("router training needs K >= 2");
  if (samples.empty()) throw ConfigError("train_router: empty dataset");
  for (const auto& s : samples) {
    if (s.label >= net.classes) {
      throw ConfigError("router label " + std::to_string(s.label) + " >= K=" + std::to_string(net.classes));
    }
  }
  numcore::OptimState<float> state;
  state.momentum = plan.momentum;
  state.max_iterations = plan.max_iterations;
  state.base_lr = {{"body", plan.lr}};
  auto params = net.parameters();
  const std::size_t variants = plan.augment ? dataprep::kClsVariants : 1;
  EpochSampler sampler(samples.size() * variants, plan.seed);
  const std::vector<double> ones(net.classes, 1.0);
  std::vector<LossRecord> log;
  log.reserve(plan.max_iterations);
  for (std::size_t it = 0; it < plan.max_iterations; ++it) {
    for (auto* p : params) p->zero_grad();
    Tape<float> tape(true, numcore::mix64(plan.seed ^ (it + 1)));
    std::optional<Var<float>> sum;
    for (std::size_t k = 0; k < plan.batch_size; ++k) {
      const std::size_t pick = sampler.next();
      const auto& s = samples[pick / variants];
      const auto view = plan.augment ? dataprep::augment_cls_variant(s.sketch, pick % variants) : s.sketch;
      const auto logits = routercls::router_forward(tape, net, tape.constant(parsenet::raster_tensor<float>(view)));
      const int target[1] = {static_cast<int>(s.label)};
      const auto ce = numcore::weighted_softmax_ce(logits, std::span<const int>(target), std::span<const double>(ones));
      sum = sum ? numcore::add(*sum, ce) : ce;
    }
    const auto loss = numcore::scale(*sum, 1.0 / static_cast<double>(plan.batch_size));
    LossRecord rec;
    rec.iteration = it;
    rec.seg = rec.total = loss.value()[0];
    rec.lr = numcore::poly_lr(state, "body");
    check_finite(rec.total, it, "loss");
    tape.backward(loss);
    numcore::sgd_momentum_step(std::span<Parameter<float>* const>(params), state);
    log.push_back(rec);
    if (progress) progress(rec);
  }
  return log;
}

}  // namespace sketchparse::learn
