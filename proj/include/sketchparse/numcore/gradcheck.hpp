#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sketchparse/numcore/tape.hpp"

namespace sketchparse::numcore {

/// Outcome of comparing reverse-mode gradients against central differences.
/// Error per coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-2).
struct GradCheckReport {
  double max_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

using LeafFn = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;
using ParamFn = std::function<Var<double>(Tape<double>&)>;

/// Checks d f / d inputs. Coordinates are strided so at most `max_coords`
/// per input are perturbed.
GradCheckReport gradient_check(const std::vector<TensorD>& inputs, const LeafFn& f,
                               double step = 1e-3, std::size_t max_coords = 4096);

/// Checks d f / d params, perturbing parameter values in place (restored after).
GradCheckReport gradient_check(std::span<Parameter<double>* const> params, const ParamFn& f,
                               double step = 1e-3, std::size_t max_coords = 4096);

}  // namespace sketchparse::numcore
