#include "sketchparse/imaging/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sketchparse::imaging {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution with replicated borders.
std::vector<double> smooth(const Raster& img, double sigma) {
  const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
  std::vector<double> src(img.pixels().begin(), img.pixels().end());
  if (sigma <= 0.0) return src;
  const auto k = gaussian_kernel(sigma);
  const long r = static_cast<long>(k.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double s = 0.0;
      for (long i = -r; i <= r; ++i) s += k[i + r] * src[y * w + std::clamp(x + i, 0L, w - 1)];
      tmp[y * w + x] = s;
    }
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double s = 0.0;
      for (long i = -r; i <= r; ++i) s += k[i + r] * tmp[std::clamp(y + i, 0L, h - 1) * w + x];
      out[y * w + x] = s;
    }
  return out;
}

std::uint8_t threshold(std::int64_t weighted_sum, std::int64_t denom) {
  return weighted_sum >= 128 * denom ? kInk : 0;
}

struct Tap {
  std::size_t lo, hi;
  std::int64_t w_lo, w_hi;  // weights over a common denominator 2*dst
};

// Half-pixel sampling positions s = (d+0.5)*src/dst - 0.5 as exact rationals.
std::vector<Tap> integer_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const std::int64_t denom = 2 * static_cast<std::int64_t>(dst);
  const std::int64_t last = static_cast<std::int64_t>(src) - 1;
  for (std::size_t d = 0; d < dst; ++d) {
    const std::int64_t num = (2 * static_cast<std::int64_t>(d) + 1) * static_cast<std::int64_t>(src) -
                             static_cast<std::int64_t>(dst);
    if (num <= 0) {
      taps[d] = {0, 0, denom, 0};
    } else if (num >= denom * last) {
      taps[d] = {static_cast<std::size_t>(last), static_cast<std::size_t>(last), denom, 0};
    } else {
      const std::int64_t lo = num / denom, rem = num % denom;
      taps[d] = {static_cast<std::size_t>(lo), static_cast<std::size_t>(lo + 1), denom - rem, rem};
    }
  }
  return taps;
}

template <typename Sampler>
Raster warp_raster(const Raster& r, Sampler&& src_of) {
  Raster out(r.width(), r.height());
  const long w = static_cast<long>(r.width()), h = static_cast<long>(r.height());
  auto px = [&](long x, long y) -> double {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : r.at(x, y);
  };
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const auto [sx, sy] = src_of(static_cast<double>(x), static_cast<double>(y));
      const double fx = std::floor(sx), fy = std::floor(sy);
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      const double ax = sx - fx, ay = sy - fy;
      const double v = (px(x0, y0) * (1 - ax) + px(x0 + 1, y0) * ax) * (1 - ay) +
                       (px(x0, y0 + 1) * (1 - ax) + px(x0 + 1, y0 + 1) * ax) * ay;
      out.at(x, y) = v >= 128.0 ? kInk : 0;
    }
  return out;
}

template <typename Sampler>
LabelMap warp_labels(const LabelMap& m, Sampler&& src_of) {
  LabelMap out(m.width(), m.height());
  const long w = static_cast<long>(m.width()), h = static_cast<long>(m.height());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const auto [sx, sy] = src_of(static_cast<double>(x), static_cast<double>(y));
      const long nx = std::lround(sx), ny = std::lround(sy);
      if (nx >= 0 && ny >= 0 && nx < w && ny < h) out.at(x, y) = m.at(nx, ny);
    }
  return out;
}

auto rotation_sampler(std::size_t w, std::size_t h, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  return [=](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    return std::pair{cx + dx * c - dy * s, cy + dx * s + dy * c};
  };
}

auto scale_sampler(std::size_t w, std::size_t h, double factor) {
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  return [=](double x, double y) { return std::pair{cx + (x - cx) / factor, cy + (y - cy) / factor}; };
}

}  // namespace

Raster canny(const Raster& photo, const CannyParams& params) {
  if (photo.empty()) throw ContractViolation("canny: empty raster");
  if (params.low < 0 || params.low > params.high) {
    throw ContractViolation("canny: thresholds must satisfy 0 <= low <= high");
  }
  const long w = static_cast<long>(photo.width()), h = static_cast<long>(photo.height());
  const auto s = smooth(photo, params.sigma);
  auto at = [&](long x, long y) { return s[std::clamp(y, 0L, h - 1) * w + std::clamp(x, 0L, w - 1)]; };

  std::vector<double> mag(s.size());
  std::vector<std::uint8_t> dir(s.size());
  double max_mag = 0.0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      const double m = std::hypot(gx, gy);
      mag[y * w + x] = m;
      max_mag = std::max(max_mag, m);
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      dir[y * w + x] = angle < 22.5 || angle >= 157.5 ? 0 : angle < 67.5 ? 1 : angle < 112.5 ? 2 : 3;
    }

  // Offsets of the neighbour along the gradient direction, per quantized bin.
  static constexpr long kDx[4] = {1, 1, 0, -1};
  static constexpr long kDy[4] = {0, 1, 1, 1};
  auto mag_at = [&](long x, long y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag[y * w + x]; };
  std::vector<std::uint8_t> thin(s.size(), 0);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const double m = mag[y * w + x];
      if (m <= 0.0) continue;
      const int d = dir[y * w + x];
      const double next = mag_at(x + kDx[d], y + kDy[d]);
      const double prev = mag_at(x - kDx[d], y - kDy[d]);
      if (m >= prev && m > next) thin[y * w + x] = 1;
    }

  const double lo = params.relative ? params.low * max_mag : params.low;
  const double hi = params.relative ? params.high * max_mag : params.high;
  Raster out(photo.width(), photo.height());
  std::vector<long> stack;
  for (long i = 0; i < w * h; ++i) {
    if (thin[i] && mag[i] > hi && out[i] == 0) {
      out[i] = kInk;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const long i = stack.back();
    stack.pop_back();
    const long x = i % w, y = i / w;
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        const long nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const long j = ny * w + nx;
        if (out[j] == 0 && thin[j] && mag[j] > lo) {
          out[j] = kInk;
          stack.push_back(j);
        }
      }
  }
  return out;
}

Raster canny(const Raster& photo, double low, double high) {
  return canny(photo, CannyParams{1.4, low, high, false});
}

Raster dilate_square(const Raster& r, std::size_t side) {
  if (side == 0 || side % 2 == 0) {
    throw ContractViolation("dilate_square: side must be odd and >= 1, got " + std::to_string(side));
  }
  if (side == 1) return r;
  const long w = static_cast<long>(r.width()), h = static_cast<long>(r.height());
  const long rad = static_cast<long>(side / 2);
  Raster tmp(r.width(), r.height()), out(r.width(), r.height());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      std::uint8_t m = 0;
      for (long i = std::max(0L, x - rad); i <= std::min(w - 1, x + rad); ++i) m = std::max(m, r.at(i, y));
      tmp.at(x, y) = m;
    }
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      std::uint8_t m = 0;
      for (long j = std::max(0L, y - rad); j <= std::min(h - 1, y + rad); ++j) m = std::max(m, tmp.at(x, j));
      out.at(x, y) = m;
    }
  return out;
}

Raster rotate(const Raster& r, double degrees) {
  if (degrees == 0.0) return r;
  return warp_raster(r, rotation_sampler(r.width(), r.height(), degrees));
}

LabelMap rotate(const LabelMap& m, double degrees) {
  if (degrees == 0.0) return m;
  return warp_labels(m, rotation_sampler(m.width(), m.height(), degrees));
}

Raster rescale(const Raster& r, double factor) {
  if (!(factor > 0.0)) throw ContractViolation("rescale: factor must be positive");
  if (factor == 1.0) return r;
  return warp_raster(r, scale_sampler(r.width(), r.height(), factor));
}

LabelMap rescale(const LabelMap& m, double factor) {
  if (!(factor > 0.0)) throw ContractViolation("rescale: factor must be positive");
  if (factor == 1.0) return m;
  return warp_labels(m, scale_sampler(m.width(), m.height(), factor));
}

Raster resize_binary(const Raster& r, std::size_t width, std::size_t height) {
  if (r.empty() || width == 0 || height == 0) throw ContractViolation("resize_binary: empty image");
  const auto tx = integer_taps(r.width(), width);
  const auto ty = integer_taps(r.height(), height);
  const std::int64_t denom = 4 * static_cast<std::int64_t>(width) * static_cast<std::int64_t>(height);
  Raster out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const Tap& a = ty[y];
    for (std::size_t x = 0; x < width; ++x) {
      const Tap& b = tx[x];
      const std::int64_t top = r.at(b.lo, a.lo) * b.w_lo + r.at(b.hi, a.lo) * b.w_hi;
      const std::int64_t bot = r.at(b.lo, a.hi) * b.w_lo + r.at(b.hi, a.hi) * b.w_hi;
      out.at(x, y) = threshold(top * a.w_lo + bot * a.w_hi, denom);
    }
  }
  return out;
}

std::array<Raster, 6> crops_and_pad(const Raster& sketch, double crop_fraction) {
  if (!(crop_fraction > 0.0 && crop_fraction < 1.0)) {
    throw ContractViolation("crop_fraction must lie in (0,1)");
  }
  const std::size_t w = sketch.width(), h = sketch.height();
  // Crops keep an even margin so the center crop is mirror-symmetric.
  auto crop_side = [&](std::size_t n) {
    const auto margin = static_cast<std::size_t>(std::lround((1.0 - crop_fraction) * n / 2.0));
    return std::max<std::size_t>(1, n - 2 * std::min(margin, (n - 1) / 2));
  };
  const std::size_t cw = crop_side(w), ch = crop_side(h);
  const std::size_t mx = (w - cw) / 2, my = (h - ch) / 2;
  const auto pad_x = static_cast<std::size_t>(std::lround((1.0 / crop_fraction - 1.0) * w / 2.0));
  const auto pad_y = static_cast<std::size_t>(std::lround((1.0 / crop_fraction - 1.0) * h / 2.0));

  auto fit = [&](const Raster& r) { return resize_binary(r, w, h); };
  return {fit(crop(sketch, 0, 0, cw, ch)),
          fit(crop(sketch, w - cw, 0, cw, ch)),
          fit(crop(sketch, 0, h - ch, cw, ch)),
          fit(crop(sketch, w - cw, h - ch, cw, ch)),
          fit(crop(sketch, mx, my, cw, ch)),
          fit(pad_to(sketch, w + 2 * pad_x, h + 2 * pad_y, pad_x, pad_y))};
}

std::vector<Component> connected_components(const LabelMap& labels) {
  const std::size_t w = labels.width(), h = labels.height();
  std::vector<char> seen(labels.size(), 0);
  std::vector<Component> out;
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] == 0 || seen[start]) continue;
    const std::uint8_t id = labels[start];
    Component comp;
    comp.part_id = id;
    queue.assign(1, start);
    seen[start] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t i = queue[q];
      const std::size_t x = i % w, y = i / w;
      auto visit = [&](std::size_t j) {
        if (!seen[j] && labels[j] == id) {
          seen[j] = 1;
          queue.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
    comp.pixels = queue;
    std::sort(comp.pixels.begin(), comp.pixels.end());
    double sr = 0, sc = 0;
    for (auto i : comp.pixels) {
      sr += static_cast<double>(i / w);
      sc += static_cast<double>(i % w);
    }
    comp.centroid_row = sr / static_cast<double>(comp.area());
    comp.centroid_col = sc / static_cast<double>(comp.area());
    out.push_back(std::move(comp));
  }
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    if (a.part_id != b.part_id) return a.part_id < b.part_id;
    if (a.centroid_row != b.centroid_row) return a.centroid_row < b.centroid_row;
    return a.centroid_col < b.centroid_col;
  });
  return out;
}

Raster label_boundaries(const LabelMap& labels) {
  const std::size_t w = labels.width(), h = labels.height();
  Raster out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto v = labels.at(x, y);
      const bool edge = (x > 0 && labels.at(x - 1, y) != v) || (x + 1 < w && labels.at(x + 1, y) != v) ||
                        (y > 0 && labels.at(x, y - 1) != v) || (y + 1 < h && labels.at(x, y + 1) != v);
      if (edge) out.at(x, y) = kInk;
    }
  return out;
}

}  // namespace sketchparse::imaging
