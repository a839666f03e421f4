#include "sketchparse/numcore/optim.hpp"

#include <cmath>

namespace sketchparse::numcore {

template <typename T>
double poly_lr(const OptimState<T>& state, const std::string& group) {
  auto it = state.base_lr.find(group);
  if (it == state.base_lr.end()) {
    throw ContractViolation("no learning rate configured for parameter group '" + group + "'");
  }
  if (state.max_iterations == 0 || state.iteration > state.max_iterations) {
    throw ContractViolation("optimizer iteration " + std::to_string(state.iteration) +
                            " exceeds max_iterations " + std::to_string(state.max_iterations));
  }
  const double progress =
      static_cast<double>(state.iteration) / static_cast<double>(state.max_iterations);
  return it->second * std::pow(1.0 - progress, state.power);
}

template <typename T>
void sgd_momentum_step(std::span<Parameter<T>* const> params, OptimState<T>& state) {
  if (state.iteration >= state.max_iterations) {
    throw ContractViolation("optimizer already reached max_iterations " +
                            std::to_string(state.max_iterations));
  }
  for (Parameter<T>* p : params) {
    const double lr = poly_lr(state, p->group);
    if (p->grad.shape() != p->value.shape()) p->zero_grad();
    auto [it, inserted] = state.velocity.try_emplace(p->name, p->value.shape());
    Tensor<T>& v = it->second;
    if (v.shape() != p->value.shape()) {
      throw ContractViolation("velocity for '" + p->name + "' has shape " +
                              shape_string(v.shape()) + ", parameter has " +
                              shape_string(p->value.shape()));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<T>(state.momentum * v[i] - lr * p->grad[i]);
      p->value[i] += v[i];
    }
  }
  ++state.iteration;
}

template double poly_lr(const OptimState<float>&, const std::string&);
template double poly_lr(const OptimState<double>&, const std::string&);
template void sgd_momentum_step(std::span<Parameter<float>* const>, OptimState<float>&);
template void sgd_momentum_step(std::span<Parameter<double>* const>, OptimState<double>&);

}  // namespace sketchparse::numcore
