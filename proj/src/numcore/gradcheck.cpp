#include "sketchparse/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace sketchparse::numcore {

namespace {

double coordinate_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
  return std::abs(analytic - numeric) / denom;
}

std::size_t stride_for(std::size_t n, std::size_t max_coords) {
  return std::max<std::size_t>(1, (n + max_coords - 1) / std::max<std::size_t>(1, max_coords));
}

void note(GradCheckReport& r, double err, std::size_t input, std::size_t index) {
  ++r.coordinates;
  if (err > r.max_error || !std::isfinite(err)) {
    r.max_error = std::isfinite(err) ? err : INFINITY;
    r.worst_input = input;
    r.worst_index = index;
  }
}

}  // namespace

GradCheckReport gradient_check(const std::vector<TensorD>& inputs, const LeafFn& f, double step,
                               std::size_t max_coords) {
  auto evaluate = [&](const std::vector<TensorD>& xs) {
    Tape<double> tape(false, 0, false);
    std::vector<Var<double>> leaves;
    for (const auto& x : xs) leaves.push_back(tape.constant(x));
    return f(tape, leaves).value()[0];
  };

  std::vector<TensorD> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.input(x));
    Var<double> loss = f(tape, leaves);
    tape.backward(loss);
    for (const auto& v : leaves) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  std::vector<TensorD> work = inputs;
  for (std::size_t k = 0; k < work.size(); ++k) {
    const std::size_t stride = stride_for(work[k].size(), max_coords);
    for (std::size_t i = 0; i < work[k].size(); i += stride) {
      const double orig = work[k][i];
      work[k][i] = orig + step;
      const double up = evaluate(work);
      work[k][i] = orig - step;
      const double down = evaluate(work);
      work[k][i] = orig;
      note(report, coordinate_error(analytic[k][i], (up - down) / (2.0 * step)), k, i);
    }
  }
  return report;
}

GradCheckReport gradient_check(std::span<Parameter<double>* const> params, const ParamFn& f,
                               double step, std::size_t max_coords) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    tape.backward(f(tape));
  }
  std::vector<TensorD> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  auto evaluate = [&] {
    Tape<double> tape(false, 0, false);
    return f(tape).value()[0];
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    const std::size_t stride = stride_for(value.size(), max_coords);
    for (std::size_t i = 0; i < value.size(); i += stride) {
      const double orig = value[i];
      value[i] = orig + step;
      const double up = evaluate();
      value[i] = orig - step;
      const double down = evaluate();
      value[i] = orig;
      note(report, coordinate_error(analytic[k][i], (up - down) / (2.0 * step)), k, i);
    }
  }
  return report;
}

}  // namespace sketchparse::numcore
