#include "sketchparse/learn/learn.hpp"

namespace sketchparse::learn {

template <typename T>
LossTerms<T> total_loss(Var<T> scores, const imaging::LabelMap& labels, const std::vector<double>& alpha,
                        Var<T> pose_logits, dataprep::Pose pose, double lambda) {
  const auto& s = scores.shape();
  if (s.size() != 3 || s[1] != labels.height() || s[2] != labels.width() || s[0] != alpha.size()) {
    throw ContractViolation("total_loss: scores " + numcore::shape_string(s) + " vs labels " +
                            std::to_string(labels.width()) + "x" + std::to_string(labels.height()) + " and " +
                            std::to_string(alpha.size()) + " weights");
  }
  if (pose_logits.value().size() != dataprep::kPoseCount) {
    throw ContractViolation("total_loss: pose logits must have 8 entries");
  }
  if (!(lambda >= 0.0)) throw ContractViolation("total_loss: lambda must be non-negative");
  std::vector<int> targets(labels.pixels().begin(), labels.pixels().end());
  const Var<T> seg = numcore::weighted_softmax_ce(scores, std::span<const int>(targets), std::span<const double>(alpha));
  const int pose_target[1] = {static_cast<int>(dataprep::pose_index(pose))};
  const std::vector<double> ones(dataprep::kPoseCount, 1.0);
  const Var<T> pl = numcore::weighted_softmax_ce(pose_logits, std::span<const int>(pose_target),
                                                 std::span<const double>(ones));
  return {seg, pl, numcore::add(seg, numcore::scale(pl, lambda))};
}

template LossTerms<float> total_loss(Var<float>, const imaging::LabelMap&, const std::vector<double>&, Var<float>,
                                     dataprep::Pose, double);
template LossTerms<double> total_loss(Var<double>, const imaging::LabelMap&, const std::vector<double>&, Var<double>,
                                      dataprep::Pose, double);

}  // namespace sketchparse::learn
