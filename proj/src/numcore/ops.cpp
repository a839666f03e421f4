#include "sketchparse/numcore/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sketchparse/numcore/rng.hpp"

namespace sketchparse::numcore {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* arg) {
  if (s.size() != rank) {
    throw ContractViolation(std::string(op) + ": " + arg + " must have rank " +
                            std::to_string(rank) + ", got " + shape_string(s));
  }
}

template <typename T>
void accumulate(Tape<T>& tape, Var<T> target, const Tensor<T>& g) {
  if (!tape.requires_grad(target)) return;
  auto& buf = tape.grad_buffer(target);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

struct ConvGeometry {
  std::size_t channels, height, width, out_h, out_w, k, stride, dilation, pad;
  std::size_t rows() const { return channels * k * k; }
  std::size_t cols() const { return out_h * out_w; }
};

// cols[(c*k+ki)*k+kj, oy*out_w+ox] = input[c, oy*s-pad+ki*r, ox*s-pad+kj*r]
template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* cols) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = input + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        T* row = cols + ((c * g.k + ki) * g.k + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki * g.dilation) - pad;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + iy * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj * g.dilation) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* input_grad) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = input_grad + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const T* row = cols + ((c * g.k + ki) * g.k + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki * g.dilation) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          const T* src = row + oy * g.out_w;
          T* dst = plane + iy * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj * g.dilation) - pad;
            if (ix >= 0 && ix < static_cast<long>(g.width)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

void ConvSpec::validate() const {
  require(kernel >= 1 && stride >= 1 && dilation >= 1,
          "conv spec requires kernel, stride and dilation >= 1");
}

std::size_t conv_output_size(std::size_t in, const ConvSpec& spec) {
  spec.validate();
  const long span = static_cast<long>(spec.dilation * (spec.kernel - 1) + 1);
  const long padded = static_cast<long>(in + 2 * spec.pad());
  require(padded >= span, "conv input of size " + std::to_string(in) +
                              " is smaller than the dilated kernel");
  return static_cast<std::size_t>((padded - span) / static_cast<long>(spec.stride)) + 1;
}

std::size_t pool_output_size(std::size_t in, std::size_t window, std::size_t stride) {
  require(window > 0 && stride > 0, "pooling window and stride must be positive");
  if (in <= window) return 1;
  return (in - window + stride - 1) / stride + 1;
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> weights, Var<T> bias, const ConvSpec& spec) {
  spec.validate();
  Tape<T>& tape = *input.tape;
  const Tensor<T>& x = input.value();
  const Tensor<T>& w = weights.value();
  const Tensor<T>& b = bias.value();
  require_rank(x.shape(), 3, "conv2d", "input");
  require_rank(w.shape(), 4, "conv2d", "weights");
  if (w.dim(1) != x.dim(0) || w.dim(2) != spec.kernel || w.dim(3) != spec.kernel ||
      b.size() != w.dim(0) || (spec.out_channels != 0 && spec.out_channels != w.dim(0))) {
    throw ContractViolation("conv2d: input " + shape_string(x.shape()) + " incompatible with weights " +
                            shape_string(w.shape()) + " / bias " + shape_string(b.shape()) +
                            " (k=" + std::to_string(spec.kernel) + ")");
  }
  const ConvGeometry g{x.dim(0),
                       x.dim(1),
                       x.dim(2),
                       conv_output_size(x.dim(1), spec),
                       conv_output_size(x.dim(2), spec),
                       spec.kernel,
                       spec.stride,
                       spec.dilation,
                       spec.pad()};
  const std::size_t filters = w.dim(0);

  std::vector<T> cols(g.rows() * g.cols());
  im2col(x.raw(), g, cols.data());

  Tensor<T> out({filters, g.out_h, g.out_w});
  MatMap<T> out_m(out.raw(), filters, g.cols());
  ConstMatMap<T> w_m(w.raw(), filters, g.rows());
  ConstMatMap<T> cols_m(cols.data(), g.rows(), g.cols());
  out_m.noalias() = w_m * cols_m;
  for (std::size_t f = 0; f < filters; ++f) out_m.row(f).array() += b[f];

  return tape.record(
      std::move(out), {input, weights, bias},
      [=, cols = std::move(cols)](Tape<T>& t, const Tensor<T>& dout) {
        ConstMatMap<T> dout_m(dout.raw(), filters, g.cols());
        ConstMatMap<T> cols_m(cols.data(), g.rows(), g.cols());
        if (t.requires_grad(weights)) {
          auto& dw = t.grad_buffer(weights);
          MatMap<T> dw_m(dw.raw(), filters, g.rows());
          dw_m.noalias() += dout_m * cols_m.transpose();
        }
        if (t.requires_grad(bias)) {
          auto& db = t.grad_buffer(bias);
          for (std::size_t f = 0; f < filters; ++f) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) s += dout_m(f, j);
            db[f] += static_cast<T>(s);
          }
        }
        if (t.requires_grad(input)) {
          ConstMatMap<T> w_m(t.value(weights).raw(), filters, g.rows());
          std::vector<T> dcols(g.rows() * g.cols());
          MatMap<T> dcols_m(dcols.data(), g.rows(), g.cols());
          dcols_m.noalias() = w_m.transpose() * dout_m;
          col2im(dcols.data(), g, t.grad_buffer(input).raw());
        }
      });
}

template <typename T>
Var<T> maxpool2d(Var<T> input, std::size_t window, std::size_t stride) {
  require(window > 0 && stride > 0, "maxpool2d: window and stride must be positive");
  const Tensor<T>& x = input.value();
  require_rank(x.shape(), 3, "maxpool2d", "input");
  const std::size_t c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = pool_output_size(h, window, stride);
  const std::size_t ow = pool_output_size(w, window, stride);
  Tensor<T> out({c_n, oh, ow});
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t y0 = oy * stride, y1 = std::min(y0 + window, h);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t x0 = ox * stride, x1 = std::min(x0 + window, w);
        std::size_t best = (c * h + y0) * w + x0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t xx = x0; xx < x1; ++xx) {
            const std::size_t idx = (c * h + y) * w + xx;
            if (x[idx] > x[best]) best = idx;  // strict: first max wins
          }
        }
        const std::size_t o = (c * oh + oy) * ow + ox;
        out[o] = x[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return input.tape->record(std::move(out), {input},
                            [=, argmax = std::move(argmax)](Tape<T>& t, const Tensor<T>& dout) {
                              auto& dx = t.grad_buffer(input);
                              for (std::size_t o = 0; o < dout.size(); ++o) dx[argmax[o]] += dout[o];
                            });
}

template <typename T>
Var<T> linear(Var<T> input, Var<T> weights, Var<T> bias) {
  const Tensor<T>& x = input.value();
  const Tensor<T>& w = weights.value();
  const Tensor<T>& b = bias.value();
  require_rank(x.shape(), 1, "linear", "input");
  require_rank(w.shape(), 2, "linear", "weights");
  if (w.dim(1) != x.dim(0) || b.size() != w.dim(0)) {
    throw ContractViolation("linear: input " + shape_string(x.shape()) +
                            " incompatible with weights " + shape_string(w.shape()) + " / bias " +
                            shape_string(b.shape()));
  }
  const std::size_t out_n = w.dim(0), in_n = w.dim(1);
  Tensor<T> out({out_n});
  for (std::size_t o = 0; o < out_n; ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < in_n; ++i) s += static_cast<double>(w[o * in_n + i]) * x[i];
    out[o] = static_cast<T>(s);
  }
  return input.tape->record(
      std::move(out), {input, weights, bias}, [=](Tape<T>& t, const Tensor<T>& dout) {
        const Tensor<T>& xv = t.value(input);
        const Tensor<T>& wv = t.value(weights);
        if (t.requires_grad(weights)) {
          auto& dw = t.grad_buffer(weights);
          for (std::size_t o = 0; o < out_n; ++o)
            for (std::size_t i = 0; i < in_n; ++i) dw[o * in_n + i] += dout[o] * xv[i];
        }
        if (t.requires_grad(bias)) {
          auto& db = t.grad_buffer(bias);
          for (std::size_t o = 0; o < out_n; ++o) db[o] += dout[o];
        }
        if (t.requires_grad(input)) {
          auto& dx = t.grad_buffer(input);
          for (std::size_t i = 0; i < in_n; ++i) {
            double s = 0.0;
            for (std::size_t o = 0; o < out_n; ++o) s += static_cast<double>(wv[o * in_n + i]) * dout[o];
            dx[i] += static_cast<T>(s);
          }
        }
      });
}

template <typename T>
Var<T> relu(Var<T> input) {
  Tensor<T> out = input.value();
  for (auto& v : out.data()) v = v > T{0} || v != v ? v : T{0};  // NaN passes through
  return input.tape->record(std::move(out), {input}, [=](Tape<T>& t, const Tensor<T>& dout) {
    const Tensor<T>& x = t.value(input);
    auto& dx = t.grad_buffer(input);
    for (std::size_t i = 0; i < dout.size(); ++i) {
      if (x[i] > T{0}) dx[i] += dout[i];
    }
  });
}

template <typename T>
Var<T> dropout(Var<T> input, double p) {
  require(p >= 0.0 && p < 1.0, "dropout probability must lie in [0,1), got " + std::to_string(p));
  Tape<T>& tape = *input.tape;
  if (!tape.training() || p == 0.0) return input;
  const std::uint64_t stream = tape.next_stream();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  const Tensor<T>& x = input.value();
  std::vector<T> mask(x.size());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = counter_uniform(tape.seed(), stream, i) >= p ? keep_scale : T{0};
    out[i] = x[i] * mask[i];
  }
  return tape.record(std::move(out), {input},
                     [=, mask = std::move(mask)](Tape<T>& t, const Tensor<T>& dout) {
                       auto& dx = t.grad_buffer(input);
                       for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += dout[i] * mask[i];
                     });
}

template <typename T>
Var<T> global_average_pool(Var<T> input) {
  const Tensor<T>& x = input.value();
  require_rank(x.shape(), 3, "global_average_pool", "input");
  const std::size_t c_n = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor<T> out({c_n});
  for (std::size_t c = 0; c < c_n; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += x[c * plane + i];
    out[c] = static_cast<T>(s / static_cast<double>(plane));
  }
  return input.tape->record(std::move(out), {input}, [=](Tape<T>& t, const Tensor<T>& dout) {
    auto& dx = t.grad_buffer(input);
    for (std::size_t c = 0; c < c_n; ++c) {
      const T g = static_cast<T>(dout[c] / static_cast<double>(plane));
      for (std::size_t i = 0; i < plane; ++i) dx[c * plane + i] += g;
    }
  });
}

namespace {

struct LerpTap {
  std::size_t lo, hi;
  double frac;
};

std::vector<LerpTap> lerp_taps(std::size_t in, std::size_t factor) {
  std::vector<LerpTap> taps(in * factor);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
    src = std::max(src, 0.0);
    const auto lo = std::min(static_cast<std::size_t>(src), in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Var<T> bilinear_upsample(Var<T> input, std::size_t factor) {
  require(factor >= 1, "bilinear_upsample: factor must be >= 1");
  const Tensor<T>& x = input.value();
  require_rank(x.shape(), 3, "bilinear_upsample", "input");
  const std::size_t c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h * factor, ow = w * factor;
  const auto ty = lerp_taps(h, factor);
  const auto tx = lerp_taps(w, factor);
  Tensor<T> out({c_n, oh, ow});
  for (std::size_t c = 0; c < c_n; ++c) {
    const T* src = x.raw() + c * h * w;
    T* dst = out.raw() + c * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const auto& a = ty[y];
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const auto& b = tx[xx];
        const double top = src[a.lo * w + b.lo] * (1.0 - b.frac) + src[a.lo * w + b.hi] * b.frac;
        const double bot = src[a.hi * w + b.lo] * (1.0 - b.frac) + src[a.hi * w + b.hi] * b.frac;
        dst[y * ow + xx] = static_cast<T>(top * (1.0 - a.frac) + bot * a.frac);
      }
    }
  }
  return input.tape->record(std::move(out), {input}, [=](Tape<T>& t, const Tensor<T>& dout) {
    auto& dx = t.grad_buffer(input);
    for (std::size_t c = 0; c < c_n; ++c) {
      T* dst = dx.raw() + c * h * w;
      const T* g = dout.raw() + c * oh * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        const auto& a = ty[y];
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const auto& b = tx[xx];
          const double v = g[y * ow + xx];
          dst[a.lo * w + b.lo] += static_cast<T>(v * (1.0 - a.frac) * (1.0 - b.frac));
          dst[a.lo * w + b.hi] += static_cast<T>(v * (1.0 - a.frac) * b.frac);
          dst[a.hi * w + b.lo] += static_cast<T>(v * a.frac * (1.0 - b.frac));
          dst[a.hi * w + b.hi] += static_cast<T>(v * a.frac * b.frac);
        }
      }
    }
  });
}

template <typename T>
Var<T> crop(Var<T> input, std::size_t height, std::size_t width) {
  const Tensor<T>& x = input.value();
  require_rank(x.shape(), 3, "crop", "input");
  const std::size_t c_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(height <= h && width <= w, "crop window [" + std::to_string(height) + "," +
                                         std::to_string(width) + "] exceeds input " +
                                         shape_string(x.shape()));
  if (height == h && width == w) return input;
  Tensor<T> out({c_n, height, width});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < height; ++y)
      std::copy_n(x.raw() + (c * h + y) * w, width, out.raw() + (c * height + y) * width);
  return input.tape->record(std::move(out), {input}, [=](Tape<T>& t, const Tensor<T>& dout) {
    auto& dx = t.grad_buffer(input);
    for (std::size_t c = 0; c < c_n; ++c)
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t xx = 0; xx < width; ++xx)
          dx[(c * h + y) * w + xx] += dout[(c * height + y) * width + xx];
  });
}

template <typename T>
Var<T> reshape(Var<T> input, Shape shape) {
  Tensor<T> out = input.value().reshaped(std::move(shape));
  return input.tape->record(std::move(out), {input}, [=](Tape<T>& t, const Tensor<T>& dout) {
    auto& dx = t.grad_buffer(input);
    for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += dout[i];
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) {
    throw ContractViolation("add: shapes " + shape_string(av.shape()) + " and " +
                            shape_string(bv.shape()) + " differ");
  }
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), {a, b}, [=](Tape<T>& t, const Tensor<T>& dout) {
    accumulate(t, a, dout);
    accumulate(t, b, dout);
  });
}

template <typename T>
Var<T> scale(Var<T> a, double factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v = static_cast<T>(v * factor);
  return a.tape->record(std::move(out), {a}, [=](Tape<T>& t, const Tensor<T>& dout) {
    auto& dx = t.grad_buffer(a);
    for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += static_cast<T>(dout[i] * factor);
  });
}

template <typename T>
Var<T> weighted_softmax_ce(Var<T> logits, std::span<const int> targets,
                           std::span<const double> weights) {
  const Tensor<T>& z = logits.value();
  require(z.rank() >= 1 && z.size() > 0, "weighted_softmax_ce: empty logits");
  const std::size_t labels = z.dim(0);
  const std::size_t positions = z.size() / labels;
  if (targets.size() != positions) {
    throw ContractViolation("weighted_softmax_ce: " + std::to_string(targets.size()) +
                            " targets for logits " + shape_string(z.shape()));
  }
  if (weights.size() != labels) {
    throw ContractViolation("weighted_softmax_ce: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(labels) + " labels");
  }
  for (std::size_t l = 0; l < labels; ++l) {
    require(weights[l] > 0.0 && std::isfinite(weights[l]),
            "weighted_softmax_ce: weight of label " + std::to_string(l) + " must be positive");
  }
  std::vector<T> probs(z.size());
  double total = 0.0;
  for (std::size_t p = 0; p < positions; ++p) {
    const int target = targets[p];
    if (target < 0 || static_cast<std::size_t>(target) >= labels) {
      throw ContractViolation("weighted_softmax_ce: label " + std::to_string(target) +
                              " at pixel " + std::to_string(p) + " outside [0," +
                              std::to_string(labels) + ")");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < labels; ++l) mx = std::max(mx, static_cast<double>(z[l * positions + p]));
    double denom = 0.0;
    for (std::size_t l = 0; l < labels; ++l) denom += std::exp(z[l * positions + p] - mx);
    const double lse = mx + std::log(denom);
    for (std::size_t l = 0; l < labels; ++l)
      probs[l * positions + p] = static_cast<T>(std::exp(z[l * positions + p] - lse));
    total += weights[target] * (lse - z[static_cast<std::size_t>(target) * positions + p]);
  }
  Tensor<T> out({1}, {static_cast<T>(total / static_cast<double>(positions))});
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return logits.tape->record(
      std::move(out), {logits},
      [=, probs = std::move(probs), tgt = std::move(tgt), wts = std::move(wts)](
          Tape<T>& t, const Tensor<T>& dout) {
        auto& dz = t.grad_buffer(logits);
        const double g = dout[0] / static_cast<double>(positions);
        for (std::size_t p = 0; p < positions; ++p) {
          const auto target = static_cast<std::size_t>(tgt[p]);
          const double gw = g * wts[target];
          for (std::size_t l = 0; l < labels; ++l) {
            const std::size_t i = l * positions + p;
            const double onehot = l == target ? 1.0 : 0.0;
            dz[i] += static_cast<T>(gw * (static_cast<double>(probs[i]) - onehot));
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> out(logits.shape());
  double mx = -std::numeric_limits<double>::infinity();
  for (T v : logits.data()) mx = std::max(mx, static_cast<double>(v));
  double denom = 0.0;
  for (T v : logits.data()) denom += std::exp(v - mx);
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = static_cast<T>(std::exp(logits[i] - mx) / denom);
  return out;
}

#define SKETCHPARSE_INSTANTIATE_OPS(T)                                                      \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, const ConvSpec&);                          \
  template Var<T> maxpool2d(Var<T>, std::size_t, std::size_t);                              \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                           \
  template Var<T> relu(Var<T>);                                                             \
  template Var<T> dropout(Var<T>, double);                                                  \
  template Var<T> global_average_pool(Var<T>);                                              \
  template Var<T> bilinear_upsample(Var<T>, std::size_t);                                   \
  template Var<T> crop(Var<T>, std::size_t, std::size_t);                                   \
  template Var<T> reshape(Var<T>, Shape);                                                   \
  template Var<T> add(Var<T>, Var<T>);                                                      \
  template Var<T> scale(Var<T>, double);                                                    \
  template Var<T> weighted_softmax_ce(Var<T>, std::span<const int>, std::span<const double>); \
  template Tensor<T> softmax(const Tensor<T>&);

SKETCHPARSE_INSTANTIATE_OPS(float)
SKETCHPARSE_INSTANTIATE_OPS(double)

}  // namespace sketchparse::numcore
