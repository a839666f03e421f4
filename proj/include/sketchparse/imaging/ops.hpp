#pragma once

#include <array>
#include <vector>

#include "sketchparse/imaging/raster.hpp"

namespace sketchparse::imaging {

struct CannyParams {
  double sigma = 1.4;
  double low = 0.0;
  double high = 0.0;
  /// When set, low/high are fractions of the image's largest gradient magnitude.
  bool relative = true;
};

inline constexpr CannyParams kDefaultCanny{1.4, 0.2, 0.4, true};

/// Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// hysteresis. Pixels with magnitude > high seed edges; pixels > low join when
/// 8-connected to a seed. Output is 0/255.
Raster canny(const Raster& photo, const CannyParams& params = kDefaultCanny);
Raster canny(const Raster& photo, double low, double high);

/// Grayscale max filter over a side x side square (side odd).
Raster dilate_square(const Raster& r, std::size_t side);

/// Rotation about the image center, positive = counter-clockwise on screen.
/// Rasters are bilinearly sampled and thresholded at 128; label maps use
/// nearest neighbour. Uncovered pixels are 0.
Raster rotate(const Raster& r, double degrees);
LabelMap rotate(const LabelMap& m, double degrees);

/// Mirror about the vertical axis (column flip).
template <typename Tag>
Grid<Tag> mirror_v(const Grid<Tag>& g) {
  Grid<Tag> out(g.width(), g.height());
  for (std::size_t y = 0; y < g.height(); ++y)
    for (std::size_t x = 0; x < g.width(); ++x) out.at(g.width() - 1 - x, y) = g.at(x, y);
  return out;
}

/// Scales content about the image center by `factor`, keeping the canvas size.
Raster rescale(const Raster& r, double factor);
LabelMap rescale(const LabelMap& m, double factor);

/// Resizes to width x height with half-pixel bilinear sampling in exact
/// integer arithmetic, thresholded at 128. Mirror-equivariant bit for bit.
Raster resize_binary(const Raster& r, std::size_t width, std::size_t height);

/// Copies the window [x0, x0+width) x [y0, y0+height).
template <typename Tag>
Grid<Tag> crop(const Grid<Tag>& g, std::size_t x0, std::size_t y0, std::size_t width,
               std::size_t height) {
  if (x0 + width > g.width() || y0 + height > g.height()) {
    throw ContractViolation("crop window exceeds image bounds");
  }
  Grid<Tag> out(width, height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) out.at(x, y) = g.at(x0 + x, y0 + y);
  return out;
}

/// Places `g` at (x0, y0) on a blank canvas of the given size.
template <typename Tag>
Grid<Tag> pad_to(const Grid<Tag>& g, std::size_t width, std::size_t height, std::size_t x0 = 0,
                 std::size_t y0 = 0) {
  if (x0 + g.width() > width || y0 + g.height() > height) {
    throw ContractViolation("pad target smaller than image");
  }
  Grid<Tag> out(width, height);
  for (std::size_t y = 0; y < g.height(); ++y)
    for (std::size_t x = 0; x < g.width(); ++x) out.at(x0 + x, y0 + y) = g.at(x, y);
  return out;
}

enum class View { kTopLeft, kTopRight, kBottomLeft, kBottomRight, kCenter, kPadded };

/// Four corner crops, a center crop (each crop_fraction of each side) and a
/// blank-padded full view, all resized back to the input size. Order follows
/// the View enum.
std::array<Raster, 6> crops_and_pad(const Raster& sketch, double crop_fraction);

struct Component {
  int part_id = 0;
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  std::size_t area() const { return pixels.size(); }
};

/// 4-connected components of each nonzero part id, ordered by
/// (part id, centroid row, centroid col).
std::vector<Component> connected_components(const LabelMap& labels);

/// Marks (255) every pixel whose 4-neighbourhood holds a different label.
Raster label_boundaries(const LabelMap& labels);

}  // namespace sketchparse::imaging
