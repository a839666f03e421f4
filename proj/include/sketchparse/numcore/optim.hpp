#pragma once

#include <map>
#include <span>
#include <string>

#include "sketchparse/numcore/tape.hpp"

namespace sketchparse::numcore {

/// SGD-with-momentum state. Learning rates are per parameter group and decay
/// as base * (1 - t/max_iterations)^power.
template <typename T>
struct OptimState {
  double momentum = 0.9;
  double power = 0.9;
  std::map<std::string, double> base_lr;
  std::size_t iteration = 0;
  std::size_t max_iterations = 1;
  std::map<std::string, Tensor<T>> velocity;
};

/// Effective learning rate of `group` at the current iteration.
template <typename T>
double poly_lr(const OptimState<T>& state, const std::string& group);

/// v <- mu*v - lr*g; p <- p + v for every parameter, then advances the
/// iteration counter. Gradients are left untouched.
template <typename T>
void sgd_momentum_step(std::span<Parameter<T>* const> params, OptimState<T>& state);

}  // namespace sketchparse::numcore
