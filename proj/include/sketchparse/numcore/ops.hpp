#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "sketchparse/numcore/tape.hpp"

namespace sketchparse::numcore {

/// Convolution geometry. Padding is zero padding on every side; when unset it
/// defaults to dilation*(kernel-1)/2, which keeps stride-1 maps the same size.
struct ConvSpec {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t out_channels = 0;
  std::optional<std::size_t> padding;

  std::size_t pad() const { return padding.value_or(dilation * (kernel - 1) / 2); }
  void validate() const;
};

/// floor((in + 2*pad - dilation*(kernel-1) - 1) / stride) + 1
std::size_t conv_output_size(std::size_t in, const ConvSpec& spec);

/// ceil((in - window) / stride) + 1, windows clipped at the right/bottom edge.
std::size_t pool_output_size(std::size_t in, std::size_t window, std::size_t stride);

// Differentiable primitives. Images are [C,H,W]; vectors are [D].

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weights, Var<T> bias, const ConvSpec& spec);

template <typename T>
Var<T> maxpool2d(Var<T> input, std::size_t window, std::size_t stride);

template <typename T>
Var<T> linear(Var<T> input, Var<T> weights, Var<T> bias);

template <typename T>
Var<T> relu(Var<T> input);

/// Inverted dropout: identity when the tape is not training or p == 0.
template <typename T>
Var<T> dropout(Var<T> input, double p);

/// [C,H,W] -> [C]
template <typename T>
Var<T> global_average_pool(Var<T> input);

/// Bilinear resize by an integer factor, half-pixel (align_corners=false) sampling.
template <typename T>
Var<T> bilinear_upsample(Var<T> input, std::size_t factor);

/// Keeps the top-left [C,height,width] window.
template <typename T>
Var<T> crop(Var<T> input, std::size_t height, std::size_t width);

template <typename T>
Var<T> reshape(Var<T> input, Shape shape);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, double factor);

/// Mean over the P positions of weights[t]*(-log softmax(logits[:,p])[t]).
/// `logits` is [L, ...] with P = size / L; targets has length P.
template <typename T>
Var<T> weighted_softmax_ce(Var<T> logits, std::span<const int> targets,
                           std::span<const double> weights);

/// Softmax over a flat vector, accumulated in double.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace sketchparse::numcore
